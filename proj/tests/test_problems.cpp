#include <catch2/catch.hpp>

#include "pevo/cli.hpp"
#include "pevo/problems.hpp"

using namespace pevo;

TEST_CASE("preset registry basics") {
  REQUIRE_THROWS_WITH(preset("nonsense"), Catch::Contains("unknown"));
  REQUIRE_THROWS(preset("generic_p", {{"p", 1.0}}));
  REQUIRE_THROWS(preset("strengthened", {{"eps", -0.5}}));

  for (const std::string& name : preset_names()) {
    CauchyProblem prob = preset(name, name == "generic_p"
                                          ? std::map<std::string, double>{{"p", 4.0}}
                                          : std::map<std::string, double>{});
    REQUIRE(prob.p >= 2);
    REQUIRE(int(prob.a_lower.size()) == prob.p);
    REQUIRE(std::abs(prob.g(0.0) - 1.0) < 1e-15);  // Gaussian datum
    // principal coefficient is real on a sample of the lattice
    for (double xi : {-7.3, -1.1, 0.5, 4.2})
      REQUIRE(std::abs(prob.a_p(0.3, 0.0, xi).imag()) == 0.0);
  }
  REQUIRE(preset_expected_pass("schrodinger_kb"));
  REQUIRE(!preset_expected_pass("adversarial_nodecay"));
}

TEST_CASE("kb coefficient matches its decay regime") {
  CauchyProblem prob = preset("schrodinger_kb", {{"c", 0.8}});
  // Im a_1 = c <x>^{-1} xi
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    double x = rng.uniform(-10, 10), xi = rng.uniform(-10, 10);
    cplx v = prob.a_lower[1](0, x, xi);
    REQUIRE(v.real() == 0.0);
    REQUIRE(v.imag() == Approx(0.8 * xi / jb(x)).epsilon(1e-12));
  }
}

TEST_CASE("cc3 certification constant matches the coefficient size") {
  double c2 = 0.6;
  CauchyProblem prob = preset("cc3", {{"c2", c2}, {"c1", 0.4}});
  GridSpec g = make_grid(20, 256, 1);
  double C = estimate_level_C(prob.a_lower[2], 2, 3, g, {0.0}, 1);
  REQUIRE(C == Approx(c2).margin(0.02));
}

TEST_CASE("pass presets certify at N = 512, L = 20 with stable constants") {
  for (const std::string& name :
       {std::string("schrodinger_kb"), std::string("cc3"), std::string("strengthened"),
        std::string("refined_mode")}) {
    CauchyProblem prob = preset(name);
    CertifyOutcome out = certify_problem(prob, 20, 512, 2.0);
    INFO(name);
    REQUIRE(!out.violation);
    REQUIRE(!out.under_resolved);
    REQUIRE(out.C_p > 0);
  }
  CauchyProblem gen = preset("generic_p", {{"p", 4.0}, {"c", 0.5}});
  CertifyOutcome out = certify_problem(gen, 20, 256, 2.0);
  REQUIRE(!out.violation);
}

TEST_CASE("time-dependent factors keep certification valid") {
  CauchyProblem prob = preset("schrodinger_kb", {{"c", 1.0}, {"time_dependent", 1.0}});
  REQUIRE(prob.time_dependent);
  CertifyOutcome out = certify_problem(prob, 20, 128, 2.0);
  REQUIRE(!out.violation);
  // the (1 + sin(t)/2) factor moves the coefficient over time
  cplx at0 = prob.a_lower[1](0.0, 1.0, 2.0);
  cplx at1 = prob.a_lower[1](kPi / 2, 1.0, 2.0);
  REQUIRE(std::abs(at1 - at0) > 0.1 * std::abs(at0));
}

TEST_CASE("adversarial preset fails certification with growing constants") {
  CauchyProblem prob = preset("adversarial_nodecay");
  GridSpec gL = make_grid(20, 256, 1);
  GridSpec g2L = make_grid(40, 512, 1);
  double vL = seminorm_estimate(with_order(prob.a_lower[1], {1, -1}), 0, 0, gL, 0).value;
  double v2L = seminorm_estimate(with_order(prob.a_lower[1], {1, -1}), 0, 0, g2L, 0).value;
  REQUIRE(v2L / vL >= 1.5);

  CertifyOutcome out = certify_problem(prob, 20, 256, 2.0);
  REQUIRE(out.violation);
}

TEST_CASE("mild growth between the gates reports under-resolution") {
  // <x>^{-0.65} decay against a declared <x>^{-1} order: domain doubling
  // moves the weighted constant by 2^0.35 ~ 1.27, inside the (1.2, 1.5) gap
  // between "stable" and "violated"
  CauchyProblem prob = preset("schrodinger_kb", {{"c", 0.0}});
  prob.a_lower[1] = separable_symbol({1, -1}, detail::jb_pow_derivs(-0.65),
                                     detail::xi_pow_derivs(1, kI));
  CertifyOutcome out = certify_problem(prob, 20, 128, 2.0);
  REQUIRE(out.under_resolved);
  REQUIRE(!out.violation);
}

TEST_CASE("refined_mode splits by hypothesis mode") {
  CauchyProblem prob = preset("refined_mode");
  REQUIRE(prob.mode == HypothesisMode::refined);
  CertifyOutcome ok = certify_problem(prob, 20, 256, 2.0);
  REQUIRE(!ok.violation);

  CauchyProblem forced = prob;
  forced.mode = HypothesisMode::full;
  CertifyOutcome bad = certify_problem(forced, 20, 256, 2.0);
  REQUIRE(bad.violation);
}

TEST_CASE("strengthened preset also satisfies the plain hypotheses") {
  CauchyProblem prob = preset("strengthened", {{"eps", 0.5}});
  REQUIRE(prob.mode == HypothesisMode::strengthened);
  CertifyOutcome strong = certify_problem(prob, 20, 256, 2.0);
  REQUIRE(!strong.violation);
  CauchyProblem as_full = prob;
  as_full.mode = HypothesisMode::full;
  CertifyOutcome full = certify_problem(as_full, 20, 256, 2.0);
  REQUIRE(!full.violation);
}
