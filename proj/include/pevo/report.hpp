#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pevo/common.hpp"
#include "pevo/grid.hpp"
#include "pevo/problem.hpp"

namespace pevo {

/// Locale-independent numeric formatting shared by every CSV writer, so that
/// identical configurations produce byte-identical files.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string fmt_int(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  return buf;
}

/// Writes header + rows to a temporary file and renames into place, so no
/// partial file survives a failure.
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_csv: cannot open " + tmp.string());
    for (size_t i = 0; i < header.size(); ++i) {
      if (i) out << ',';
      out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << row[i];
      }
      out << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

/// Flat [section] key = value configuration for the CLI driver.
struct RunConfig {
  std::string preset_name = "schrodinger_kb";
  std::map<std::string, double> params;

  double L = 20;
  int N = 512;
  NormSpec norm{0, 2};
  int steps = 400;
  double mollifier_R = 2.0;

  std::optional<double> h_override;
  std::optional<double> M_scale;
  std::optional<double> sigma_override;
  double c_cap = 1e6;
  std::optional<HypothesisMode> mode_override;

  std::string sweep_axis;
  std::vector<double> sweep_values;

  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_num(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw Error("config: bad numeric value '" + s + "' in " + where);
  }
}

inline HypothesisMode parse_mode(const std::string& s) {
  if (s == "full") return HypothesisMode::full;
  if (s == "refined") return HypothesisMode::refined;
  if (s == "strengthened") return HypothesisMode::strengthened;
  throw Error("config: unknown mode '" + s + "'");
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = detail::trim(s.substr(1, s.size() - 2));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw Error("config: expected key = value at line " + std::to_string(lineno));
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    std::string where = section + "." + key;

    if (section == "preset") {
      if (key == "name")
        cfg.preset_name = val;
      else
        cfg.params[key] = detail::parse_num(val, where);
    } else if (section == "grid") {
      if (key == "L")
        cfg.L = detail::parse_num(val, where);
      else if (key == "N")
        cfg.N = int(detail::parse_num(val, where));
      else
        throw Error("config: unknown key " + where);
    } else if (section == "norm") {
      if (key == "s1")
        cfg.norm.s1 = detail::parse_num(val, where);
      else if (key == "s2")
        cfg.norm.s2 = detail::parse_num(val, where);
      else
        throw Error("config: unknown key " + where);
    } else if (section == "time") {
      if (key == "T")
        cfg.params["T"] = detail::parse_num(val, where);
      else if (key == "steps")
        cfg.steps = int(detail::parse_num(val, where));
      else
        throw Error("config: unknown key " + where);
    } else if (section == "mollifier") {
      if (key == "R")
        cfg.mollifier_R = detail::parse_num(val, where);
      else
        throw Error("config: unknown key " + where);
    } else if (section == "calibration") {
      if (key == "h")
        cfg.h_override = detail::parse_num(val, where);
      else if (key == "M_scale")
        cfg.M_scale = detail::parse_num(val, where);
      else
        throw Error("config: unknown key " + where);
    } else if (section == "run") {
      if (key == "mode")
        cfg.mode_override = detail::parse_mode(val);
      else if (key == "sigma")
        cfg.sigma_override = detail::parse_num(val, where);
      else if (key == "c_cap")
        cfg.c_cap = detail::parse_num(val, where);
      else
        throw Error("config: unknown key " + where);
    } else if (section == "sweep") {
      if (key == "axis")
        cfg.sweep_axis = val;
      else if (key == "values") {
        std::stringstream ss(val);
        std::string item;
        while (std::getline(ss, item, ','))
          cfg.sweep_values.push_back(detail::parse_num(detail::trim(item), where));
      } else
        throw Error("config: unknown key " + where);
    } else if (section == "output") {
      if (key == "dir")
        cfg.out_dir = val;
      else
        throw Error("config: unknown key " + where);
    } else {
      throw Error("config: unknown section [" + section + "]");
    }
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  return parse_config(in);
}

}  // namespace pevo
