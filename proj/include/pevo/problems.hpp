#pragma once

#include <map>
#include <string>
#include <vector>

#include "pevo/problem.hpp"

namespace pevo {

namespace detail {

inline std::vector<std::function<cplx(double)>> xi_pow_derivs(int n, cplx scale) {
  std::vector<std::function<cplx(double)>> out;
  double coef = 1;
  for (int d = 0; d <= 5; ++d) {
    int e = n - d;
    if (e < 0) {
      out.push_back([](double) { return cplx(0); });
      continue;
    }
    double c = coef;
    out.push_back([c, e, scale](double xi) { return scale * c * std::pow(xi, e); });
    coef *= (n - d);
  }
  return out;
}

/// d^k/dx^k <x>^s for k = 0..4.
inline double jb_pow_d(double s, int k, double x) {
  double u = 1 + x * x;
  auto up = [&](double e) { return std::pow(u, e); };
  switch (k) {
    case 0: return up(s / 2);
    case 1: return s * x * up(s / 2 - 1);
    case 2: return s * up(s / 2 - 1) + s * (s - 2) * x * x * up(s / 2 - 2);
    case 3:
      return 3 * s * (s - 2) * x * up(s / 2 - 2) +
             s * (s - 2) * (s - 4) * x * x * x * up(s / 2 - 3);
    case 4:
      return 3 * s * (s - 2) * up(s / 2 - 2) +
             6 * s * (s - 2) * (s - 4) * x * x * up(s / 2 - 3) +
             s * (s - 2) * (s - 4) * (s - 6) * x * x * x * x * up(s / 2 - 4);
    default: throw Error("jb_pow_d: derivative order beyond 4");
  }
}

inline std::vector<std::function<double(double)>> jb_pow_derivs(double s) {
  std::vector<std::function<double(double)>> out;
  for (int k = 0; k <= 4; ++k)
    out.push_back([s, k](double x) { return jb_pow_d(s, k, x); });
  return out;
}

inline std::vector<std::function<double(double)>> const_x_derivs() {
  std::vector<std::function<double(double)>> out;
  out.push_back([](double) { return 1.0; });
  for (int k = 1; k <= 4; ++k) out.push_back([](double) { return 0.0; });
  return out;
}

inline double get(const std::map<std::string, double>& m, const std::string& key,
                  double dflt) {
  auto it = m.find(key);
  return it == m.end() ? dflt : it->second;
}

inline std::function<double(double)> time_factor(bool on) {
  if (!on) return nullptr;
  return [](double t) { return 1.0 + 0.5 * std::sin(t); };
}

}  // namespace detail

/// xi^n as a symbol of order (n, 0), optionally scaled and time-modulated.
inline Symbol monomial_symbol(int n, cplx scale = 1.0,
                              std::function<double(double)> tf = nullptr) {
  return separable_symbol({double(n), 0}, detail::const_x_derivs(),
                          detail::xi_pow_derivs(n, scale), std::move(tf));
}

/// scale * <x>^s2pow * xi^n with declared order (n, s2pow).
inline Symbol coeff_symbol(cplx scale, double s2pow, int n,
                           std::function<double(double)> tf = nullptr) {
  return separable_symbol({double(n), s2pow}, detail::jb_pow_derivs(s2pow),
                          detail::xi_pow_derivs(n, scale), std::move(tf));
}

inline std::function<cplx(double)> gaussian_datum() {
  return [](double x) { return cplx(std::exp(-x * x / 2)); };
}

/// Preset problem library. Strength parameters:
///   c, c1, c2 : coefficient sizes; eps : extra decay of "strengthened";
///   p         : equation order of "generic_p";
///   time_dependent != 0 : multiply lower coefficients by (1 + sin(t)/2);
///   T         : horizon override.
inline CauchyProblem preset(const std::string& name,
                            const std::map<std::string, double>& params = {}) {
  using detail::get;
  bool tdep = get(params, "time_dependent", 0) != 0;
  auto tf = detail::time_factor(tdep);

  CauchyProblem prob;
  prob.g = gaussian_datum();
  prob.time_dependent = tdep;

  if (name == "schrodinger_kb") {
    double c = get(params, "c", 1.0);
    prob.p = 2;
    prob.a_p = monomial_symbol(2);
    prob.a_lower.resize(2, zero_symbol());
    prob.a_lower[1] = coeff_symbol(c * kI, -1.0, 1, tf);
    prob.T = get(params, "T", 1.0);
    return prob;
  }
  if (name == "cc3") {
    double c2 = get(params, "c2", 1.0);
    double c1 = get(params, "c1", 1.0);
    prob.p = 3;
    prob.a_p = monomial_symbol(3);
    prob.a_lower.resize(3, zero_symbol());
    prob.a_lower[2] = coeff_symbol(c2 * kI, -1.0, 2, tf);
    prob.a_lower[1] = coeff_symbol(c1 * kI, -0.5, 1, tf);
    // xi^3 wavepackets disperse fast; the short default horizon keeps the
    // solution clear of the domain boundary at L = 20
    prob.T = get(params, "T", 0.1);
    return prob;
  }
  if (name == "generic_p") {
    int p = int(get(params, "p", 4));
    require(p >= 2, "preset generic_p: p must be >= 2");
    double c = get(params, "c", 1.0);
    prob.p = p;
    prob.a_p = monomial_symbol(p);
    prob.a_lower.resize(p, zero_symbol());
    for (int j = 1; j <= p - 1; ++j) {
      double cj = get(params, "c" + std::to_string(j), c);  // per-level override
      prob.a_lower[j] = coeff_symbol(cj * kI, -double(j) / (p - 1), j, tf);
    }
    // group velocities scale like p |xi|^{p-1}: shrink the default horizon
    // accordingly so the solution stays clear of the boundary
    prob.T = get(params, "T", p == 2 ? 1.0 : 0.1 / std::pow(10.0, p - 3));
    return prob;
  }
  if (name == "strengthened") {
    double c = get(params, "c", 1.0);
    double eps = get(params, "eps", 0.5);
    require(eps > 0, "preset strengthened: eps must be positive");
    prob.p = 2;
    prob.a_p = monomial_symbol(2);
    prob.a_lower.resize(2, zero_symbol());
    prob.a_lower[1] = coeff_symbol(c * kI, -(1.0 + eps), 1, tf);
    prob.T = get(params, "T", 1.0);
    prob.mode = HypothesisMode::strengthened;
    prob.strengthened_eps = eps;
    return prob;
  }
  if (name == "adversarial_nodecay") {
    double c = get(params, "c", 1.0);
    prob.p = 2;
    prob.a_p = monomial_symbol(2);
    prob.a_lower.resize(2, zero_symbol());
    // imaginary part with no x-decay, declared at the hypothesis order:
    // certification must catch the growth under domain doubling
    prob.a_lower[1] = separable_symbol({1, -1}, detail::const_x_derivs(),
                                       detail::xi_pow_derivs(1, c * kI), tf);
    prob.T = get(params, "T", 1.0);
    return prob;
  }
  if (name == "refined_mode") {
    double c_re = get(params, "c_re", 1.0);
    double c_im = get(params, "c_im", 1.0);
    prob.p = 2;
    prob.a_p = monomial_symbol(2);
    prob.a_lower.resize(2, zero_symbol());
    // real part bounded but with no decay (admissible only under the
    // refined hypotheses); imaginary part decays as required
    std::vector<Symbol> parts = {
        separable_symbol({1, -1}, detail::const_x_derivs(),
                         detail::xi_pow_derivs(1, cplx(c_re)), tf),
        coeff_symbol(c_im * kI, -1.0, 1, tf)};
    prob.a_lower[1] = sum_symbol(std::move(parts), {1, -1});
    prob.T = get(params, "T", 1.0);
    prob.mode = HypothesisMode::refined;
    return prob;
  }
  throw Error("preset: unknown name '" + name + "'");
}

inline bool preset_expected_pass(const std::string& name) {
  return name != "adversarial_nodecay";
}

inline std::vector<std::string> preset_names() {
  return {"schrodinger_kb",  "cc3",  "generic_p", "strengthened", "adversarial_nodecay",
          "refined_mode"};
}

}  // namespace pevo
