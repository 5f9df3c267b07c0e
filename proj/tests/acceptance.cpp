// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Regression fixtures were frozen from the first verified runs at
// L = 24 (energy box) and carry a +-5% band.

#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pevo/cli.hpp"

using namespace pevo;

namespace {

constexpr double kBoxL = 24;

// frozen regression fixtures (first verified run)
constexpr double kKbH = 4.0;
constexpr double kKbM1 = 0.877653;
constexpr double kGardingBound = -8.1144;
constexpr double kEnergyC = 0.71800426;
constexpr double kStrengthenedC = 14.618308;
constexpr double kCc3H = 2.0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[criterion %02d] %s: %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

bool within(double value, double fixture, double rel) {
  return std::abs(value - fixture) <= rel * std::abs(fixture);
}

/// Shared heavy state: the flagship calibration and chains, built once.
struct KbLab {
  CauchyProblem prob = preset("schrodinger_kb", {{"c", 1.0}});
  GridSpec g256 = make_grid(kBoxL, 256, 1);
  GridSpec g512 = make_grid(kBoxL, 512, 1);
  CalibrationResult calib;
  ConjugationChain chain256, chain512;

  KbLab() {
    calib = calibrate(prob, g512, MollifierConfig(2.0, +1));
    chain256 = build_chain(g256, calib);
    chain512 = build_chain(g512, calib);
  }

  static KbLab& get() {
    static KbLab lab;
    return lab;
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("criterion 01: quantization sanity") {
  GridSpec g = make_grid(kPi, 128, 1);
  Vec u(g.N);
  for (int j = 0; j < g.N; ++j) u[j] = std::sin(g.x[j]) + 0.3 * std::cos(2 * g.x[j]);

  Vec same = apply_op(monomial_symbol(0), u, g, 0);
  double e_identity = (same - u).norm() / u.norm();

  Symbol mult = monomial_symbol(2, cplx(1.0, -0.5));
  Vec via_op = apply_op(mult, u, g, 0);
  Vec via_fm = fourier_multiplier(u, [&](double xi) { return mult(0, 0, xi); }, g);
  double e_mult = (via_op - via_fm).norm() / u.norm();

  Vec s(g.N);
  for (int j = 0; j < g.N; ++j) s[j] = std::sin(g.x[j]);
  Vec ds = fourier_multiplier(s, [](double xi) { return kI * xi; }, g);
  double e_deriv = 0;
  for (int j = 0; j < g.N; ++j)
    e_deriv = std::max(e_deriv, std::abs(ds[j] - std::cos(g.x[j])));

  bool ok = e_identity <= 1e-12 && e_mult <= 1e-12 && e_deriv <= 1e-12;
  report(1, ok,
         "identity " + fmt_num(e_identity) + ", multiplier " + fmt_num(e_mult) +
             ", spectral derivative " + fmt_num(e_deriv));
  REQUIRE(ok);
}

TEST_CASE("criterion 02: calculus expansion") {
  GridSpec g = make_grid(20, 128, 1);
  Symbol xsym = separable_symbol({0, 1}, {[](double x) { return x; }, [](double) { return 1.0; },
                                          [](double) { return 0.0; }},
                                 detail::xi_pow_derivs(0, 1.0));
  ExpansionResult ex = compose_asymptotic(monomial_symbol(1), xsym, 2);
  Mat product = to_matrix(monomial_symbol(1), g, 0).A * to_matrix(xsym, g, 0).A;
  Mat truncated = to_matrix(ex.truncated_sum(), g, 0).A;
  double e_comp = residual_on_states(product, truncated, smooth_test_states(g));

  // residual decay on the exponential pair
  MollifierConfig cfg(2.0, +1);
  LambdaSymbol lam = lambda_lower(2, 1.0, 3, 2.0, cfg);
  Symbol q = exp_lambda(lam, +1);
  std::vector<std::function<cplx(double)>> jb2;
  for (int k = 0; k <= 4; ++k)
    jb2.push_back([k](double xi) { return cplx(detail::jb_pow_d(2.0, k, xi)); });
  jb2.push_back([](double) { return cplx(0); });
  Symbol P = separable_symbol({2, 0}, detail::const_x_derivs(), jb2);
  Mat full = to_matrix(P, g, 0).A * to_matrix(q, g, 0).A;
  auto states = smooth_test_states(g);
  double res[3];
  for (int n = 1; n <= 3; ++n) {
    Mat approx = to_matrix(compose_asymptotic(P, q, n).truncated_sum(), g, 0).A;
    res[n - 1] = residual_on_states(full, approx, states);
  }
  bool decreasing = res[1] < res[0] && res[2] < res[1];

  bool ok = e_comp <= 1e-10 && decreasing;
  report(2, ok,
         "x-xi composite " + fmt_num(e_comp) + ", exp-pair residuals " + fmt_num(res[0]) +
             " > " + fmt_num(res[1]) + " > " + fmt_num(res[2]));
  REQUIRE(ok);
}

TEST_CASE("criterion 03: lambda estimates") {
  MollifierConfig cfg(2.0, +1, -1);
  double M = 1.4;
  LambdaSymbol top = lambda_top(M, 2, 2.0, cfg);
  Rng rng(99);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double x = rng.uniform(-60, 60), xi = rng.uniform(-60, 60);
    if (std::abs(top(0, x, xi).real()) > M * (1 + std::log(jb(x)))) ++violations;
  }

  // saturation and SG(0,0) seminorm boundedness for k >= 2
  int p = 3, k = 2;
  LambdaSymbol low = lambda_lower(k, 1.0, p, 1.0, MollifierConfig(2.0, +1));
  double xi0 = 1.3, rho = jbh(xi0, 1.0);
  double xsat = std::sqrt(std::pow(rho, 2.0 * (p - 1)) - 1);
  double sat_dev = 0, v0 = low(0, xsat, xi0).real();
  for (double x : {xsat + 1, xsat + 5, xsat + 11})
    sat_dev = std::max(sat_dev, std::abs(low(0, x, xi0).real() - v0));

  double sm_L = seminorm_estimate(low.sym, 0, 0, make_grid(20, 128, 1), 0).value;
  double sm_2L = seminorm_estimate(low.sym, 0, 0, make_grid(40, 256, 1), 0).value;
  bool sg00 = std::isfinite(sm_L) && sm_2L / sm_L <= 1.25;

  bool ok = violations == 0 && sat_dev <= 2e-9 * std::abs(v0) && sg00;
  report(3, ok,
         "log-bound violations " + fmt_int(violations) + ", saturation dev " +
             fmt_num(sat_dev) + ", SG00 sup " + fmt_num(sm_L) + " -> " + fmt_num(sm_2L));
  REQUIRE(ok);
}

TEST_CASE("criterion 04: invertibility and h trend") {
  KbLab& lab = KbLab::get();
  Mat I512 = Mat::Identity(512, 512);
  double inv_kb = operator_norm(lab.chain512.steps[0].E_plus.A *
                                    lab.chain512.steps[0].inverse.A - I512);

  auto rem = [&](double h) {
    LambdaSymbol lam =
        grid_mollified(lambda_top(lab.calib.M[0], 2, h, lab.calib.cfg), lab.g512);
    Mat Ep = to_matrix(exp_lambda(lam, +1), lab.g512, 0).A;
    Mat Em = to_matrix(exp_lambda(lam, -1), lab.g512, 0).A;
    return operator_norm(I512 - Ep * Em);
  };
  double r1 = rem(lab.calib.h), r2 = rem(2 * lab.calib.h);

  CauchyProblem c3 = preset("cc3");
  CalibrationResult cal3 = calibrate(c3, lab.g512, MollifierConfig(2.0, +1));
  ConjugationChain ch3 = build_chain(lab.g512, cal3);
  double inv_cc3 = 0;
  for (const auto& st : ch3.steps)
    inv_cc3 = std::max(inv_cc3, operator_norm(st.E_plus.A * st.inverse.A - I512));

  bool ok = inv_kb <= 1e-8 && inv_cc3 <= 1e-8 && r2 <= 0.75 * r1 &&
            lab.calib.h == kKbH && cal3.h == kCc3H;
  report(4, ok,
         "kb inverse " + fmt_num(inv_kb) + ", cc3 inverse " + fmt_num(inv_cc3) +
             ", remainder " + fmt_num(r1) + " -> " + fmt_num(r2) + " (h = " +
             fmt_num(lab.calib.h) + ", " + fmt_num(cal3.h) + ")");
  REQUIRE(ok);
}

TEST_CASE("criterion 05: sharp Garding conclusion") {
  KbLab& lab = KbLab::get();
  OperatorMatrix A256 = assemble_generator(lab.prob, lab.g256, 0);
  OperatorMatrix A512 = assemble_generator(lab.prob, lab.g512, 0);
  double raw256 = min_hermitian_eigenvalue(A256);
  double raw512 = min_hermitian_eigenvalue(A512);
  bool diverges = raw256 < 0 && raw512 < 0 && (raw512 / raw256) > 1.5;

  OperatorMatrix Al256 = conjugate_generator(A256, lab.chain256);
  OperatorMatrix Al512 = conjugate_generator(A512, lab.chain512);
  ConjugationDiagnostics diag = diagnose_chain(lab.prob, lab.g512, lab.calib);
  double c_max = 10 * (1 + diag.residual_c);
  PositivityReport pos = positivity_check(Al256, lab.g256, Al512, lab.g512, c_max);
  bool fixture_ok = within(pos.lower_bound, kGardingBound, 0.05);

  bool ok = diverges && pos.pass && fixture_ok;
  report(5, ok,
         "untransformed " + fmt_num(raw256) + " -> " + fmt_num(raw512) + ", conjugated " +
             fmt_num(pos.lower_bound_coarse) + " -> " + fmt_num(pos.lower_bound) +
             " (stability " + fmt_num(pos.stability_ratio) + ", c_max " + fmt_num(c_max) +
             ")");
  REQUIRE(ok);
}

TEST_CASE("criterion 06: unitary baseline") {
  GridSpec g = make_grid(kBoxL, 256, 1);
  CauchyProblem free_p = preset("schrodinger_kb", {{"c", 0.0}});
  CalibrationResult calib;
  calib.p = 2;
  calib.h = 1;
  calib.cfg = MollifierConfig(2.0, +1);
  calib.M = {0.0};
  ConjugationChain chain = build_chain(g, calib);
  SolveResult res = solve(free_p, chain, g, {0, 0}, 400, 0.0);
  double drift = 0;
  for (double n : res.report.norm_u)
    drift = std::max(drift, std::abs(n - res.report.norm_u[0]) / res.report.norm_u[0]);
  bool ok = drift <= 1e-10 && std::abs(res.report.fitted_C - 1.0) <= 1e-6;
  report(6, ok, "norm drift " + fmt_num(drift) + ", fitted C " + fmt_num(res.report.fitted_C));
  REQUIRE(ok);
}

TEST_CASE("criterion 07: integrator order") {
  GridSpec g = make_grid(14, 128, 1);
  CauchyProblem free_p = preset("schrodinger_kb", {{"c", 0.0}});
  double T = 0.5;
  Mat A = assemble_generator(free_p, g, 0).A;
  Vec g0(g.N);
  for (int j = 0; j < g.N; ++j) g0[j] = free_p.g(g.x[j]);
  Vec exact = fourier_multiplier(
      g0, [T](double xi) { return std::exp(-kI * xi * xi * T); }, g);
  auto err_at = [&](int steps) {
    double dt = T / steps;
    Vec u = g0;
    Eigen::PartialPivLU<Mat> lu(Mat::Identity(g.N, g.N) + dt / 2 * A);
    Mat rhs = Mat::Identity(g.N, g.N) - dt / 2 * A;
    for (int i = 0; i < steps; ++i) u = lu.solve(rhs * u);
    return (u - exact).norm();
  };
  double e1 = err_at(50), e2 = err_at(100), e3 = err_at(200);
  double q1 = e1 / e2, q2 = e2 / e3;
  bool ok = q1 >= 3.2 && q1 <= 4.8 && q2 >= 3.2 && q2 <= 4.8;
  report(7, ok, "dt-halving ratios " + fmt_num(q1) + ", " + fmt_num(q2));
  REQUIRE(ok);
}

TEST_CASE("criterion 08: weighted energy estimate") {
  KbLab& lab = KbLab::get();
  SolveResult s512 = solve(lab.prob, lab.chain512, lab.g512, {0, 2}, 400);
  SolveResult s256 = solve(lab.prob, lab.chain256, lab.g256, {0, 2}, 400);
  double ratio = s512.report.fitted_C / s256.report.fitted_C;
  bool ok = std::isfinite(s512.report.fitted_C) && ratio >= 0.8 && ratio <= 1.25 &&
            within(s512.report.fitted_C, kEnergyC, 0.05) &&
            std::abs(s512.report.sigma - 2 * kKbM1) <= 0.05 * 2 * kKbM1;
  report(8, ok,
         "fitted C " + fmt_num(s512.report.fitted_C) + " (coarse " +
             fmt_num(s256.report.fitted_C) + ", ratio " + fmt_num(ratio) + ", sigma " +
             fmt_num(s512.report.sigma) + ")");
  REQUIRE(ok);
}

TEST_CASE("criterion 09: loss-of-decay contrast") {
  KbLab& lab = KbLab::get();

  CauchyProblem st = preset("strengthened", {{"c", 1.0}, {"eps", 0.5}});
  CalibrationResult cst = calibrate(st, lab.g512, MollifierConfig(2.0, +1));
  ConjugationChain st512 = build_chain(lab.g512, cst);
  ConjugationChain st256 = build_chain(lab.g256, cst);
  SolveResult t512 = solve(st, st512, lab.g512, {0, 2}, 400, 0.0);
  SolveResult t256 = solve(st, st256, lab.g256, {0, 2}, 400, 0.0);
  EnergyReport strep = t512.report;
  strep.fitted_C_secondary = t256.report.fitted_C;
  VerifyResult sver = verify_energy_estimate(strep, 1.5 * kStrengthenedC);
  bool strengthened_ok = sver.pass && within(strep.fitted_C, kStrengthenedC, 0.05);

  SolveResult z512 = solve(lab.prob, lab.chain512, lab.g512, {0, 2}, 400, 0.0);
  SolveResult z256 = solve(lab.prob, lab.chain256, lab.g256, {0, 2}, 400, 0.0);
  SolveResult ref = solve(lab.prob, lab.chain512, lab.g512, {0, 2}, 400);
  double zratio = z512.report.fitted_C / z256.report.fitted_C;
  bool unstable = zratio < 0.8 || zratio > 1.25;
  bool amplified = z512.report.fitted_C >= 1.5 * ref.report.fitted_C;
  bool kb_shows_loss = amplified || unstable;

  bool ok = strengthened_ok && kb_shows_loss;
  report(9, ok,
         "strengthened sigma=0 C " + fmt_num(strep.fitted_C) + " (pass " +
             (sver.pass ? "1" : "0") + "), kb sigma=0 C " + fmt_num(z512.report.fitted_C) +
             " vs sigma=2M C " + fmt_num(ref.report.fitted_C));
  REQUIRE(ok);
}

TEST_CASE("criterion 10: hypothesis gate") {
  std::ostringstream log;
  auto dir = std::filesystem::temp_directory_path() / "pevo_acceptance_certify";
  std::filesystem::remove_all(dir);

  RunConfig adv;
  adv.preset_name = "adversarial_nodecay";
  adv.L = 20;
  adv.N = 256;
  adv.out_dir = (dir / "adv").string();
  int rc_adv = cmd_certify(adv, log);

  // the offending constant grows under domain doubling
  CauchyProblem aprob = preset("adversarial_nodecay");
  double vL = seminorm_estimate(with_order(aprob.a_lower[1], {1, -1}), 0, 0,
                                make_grid(20, 256, 1), 0)
                  .value;
  double v2L = seminorm_estimate(with_order(aprob.a_lower[1], {1, -1}), 0, 0,
                                 make_grid(40, 512, 1), 0)
                   .value;

  RunConfig ref;
  ref.preset_name = "refined_mode";
  ref.L = 20;
  ref.N = 256;
  ref.out_dir = (dir / "ref").string();
  int rc_refined = cmd_certify(ref, log);
  ref.mode_override = HypothesisMode::full;
  ref.out_dir = (dir / "ref_full").string();
  int rc_full = cmd_certify(ref, log);

  bool ok = rc_adv == kExitHypothesis && v2L / vL >= 1.5 && rc_refined == kExitOk &&
            rc_full == kExitHypothesis;
  report(10, ok,
         "adversarial exit " + fmt_int(rc_adv) + " (growth " + fmt_num(v2L / vL) +
             "), refined exit " + fmt_int(rc_refined) + ", forced-full exit " +
             fmt_int(rc_full));
  std::filesystem::remove_all(dir);
  REQUIRE(ok);
}

TEST_CASE("criterion 11: determinism of the CLI pipeline") {
  auto dir = std::filesystem::temp_directory_path() / "pevo_acceptance_determinism";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream conf(dir / "run.conf");
    conf << "[preset]\nname = schrodinger_kb\nc = 1\n"
            "[grid]\nL = 24\nN = 256\n"
            "[norm]\ns1 = 0\ns2 = 2\n"
            "[time]\nsteps = 400\n"
            "[run]\nc_cap = 10\n";
  }
  auto run = [&](const std::string& out) {
    std::string cmd = std::string(PEVO_BIN) + " run --config " + (dir / "run.conf").string() +
                      " --out " + (dir / out).string() + " > /dev/null";
    return std::system(cmd.c_str());
  };
  int rc1 = run("a");
  int rc2 = run("b");
  bool same = true;
  for (const char* f : {"energy.csv", "summary.csv", "calibration.csv", "certify.csv"})
    same = same && slurp(dir / "a" / f) == slurp(dir / "b" / f) && !slurp(dir / "a" / f).empty();
  bool ok = WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0 && same;
  report(11, ok,
         std::string("exits ") + fmt_int(WEXITSTATUS(rc1)) + "/" + fmt_int(WEXITSTATUS(rc2)) +
             ", byte-identical " + (same ? "yes" : "no"));
  std::filesystem::remove_all(dir);
  REQUIRE(ok);
}
