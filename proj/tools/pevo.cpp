// pevo - certify, calibrate, run and sweep 1-D p-evolution Cauchy problems
// on a truncated line with weighted-Sobolev energy tracking.

#include <iostream>
#include <string>

#include "pevo/cli.hpp"

namespace {

void usage(std::ostream& os) {
  os << "usage: pevo <certify|calibrate|run|sweep> --config <path> [--out <dir>]\n"
        "            [--mode full|refined|strengthened]\n"
        "\n"
        "  certify    check the coefficient decay hypotheses; writes certify.csv\n"
        "  calibrate  choose the amplitudes M and the parameter h; writes calibration.csv\n"
        "  run        integrate and verify the energy estimate; writes energy.csv, summary.csv\n"
        "  sweep      repeat runs along one axis (h, M, N, sigma); writes sweep.csv\n"
        "\n"
        "  PEVO_THREADS caps sweep parallelism.\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pevo;
  if (argc < 2) {
    usage(std::cerr);
    return kExitConfig;
  }
  std::string cmd = argv[1];
  std::string config_path, out_dir, mode;
  for (int i = 2; i < argc; ++i) {
    std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        usage(std::cerr);
        std::exit(kExitConfig);
      }
      return argv[++i];
    };
    if (arg == "--config")
      config_path = next();
    else if (arg == "--out")
      out_dir = next();
    else if (arg == "--mode")
      mode = next();
    else if (arg == "--help" || arg == "-h") {
      usage(std::cout);
      return kExitOk;
    } else {
      std::cerr << "pevo: unknown argument '" << arg << "'\n";
      usage(std::cerr);
      return kExitConfig;
    }
  }
  if (config_path.empty()) {
    std::cerr << "pevo: --config is required\n";
    return kExitConfig;
  }

  try {
    RunConfig cfg = parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!mode.empty()) cfg.mode_override = detail::parse_mode(mode);

    if (cmd == "certify") return cmd_certify(cfg, std::cout);
    if (cmd == "calibrate") return cmd_calibrate(cfg, std::cout);
    if (cmd == "run") return cmd_run(cfg, std::cout);
    if (cmd == "sweep") return cmd_sweep(cfg, std::cout);
    std::cerr << "pevo: unknown command '" << cmd << "'\n";
    usage(std::cerr);
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "pevo: " << e.what() << "\n";
    return kExitConfig;
  }
}
