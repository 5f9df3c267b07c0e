#pragma once

#include <optional>
#include <vector>

#include <Eigen/LU>

#include "pevo/conjugation.hpp"
#include "pevo/garding.hpp"
#include "pevo/problem.hpp"

namespace pevo {

/// Generator matrix A(t) with iP = d_t + A: A = i Op(a_p) + sum_j i Op(a_j),
/// built in a single quantization pass over the summed symbol.
inline OperatorMatrix assemble_generator(const CauchyProblem& prob, const GridSpec& g,
                                         double t) {
  std::vector<Symbol> parts;
  parts.push_back(scaled_symbol(kI, prob.a_p));
  for (const auto& aj : prob.a_lower) parts.push_back(scaled_symbol(kI, aj));
  Symbol total = sum_symbol(std::move(parts), {double(prob.p), 0});
  return to_matrix(total, g, t, "generator");
}

/// One Crank-Nicolson step for d_t u + A u = f:
///   (I + dt/2 A(t+dt)) u+ = (I - dt/2 A(t)) u + dt * (f(t) + f(t+dt)) / 2.
inline Vec step_crank_nicolson(const Vec& u, const Mat& A_t, const Mat& A_tdt,
                               const Vec& f_t, const Vec& f_tdt, double dt) {
  require(dt > 0, "step_crank_nicolson: dt must be positive");
  const Eigen::Index n = u.size();
  Mat lhs = Mat::Identity(n, n) + (dt / 2) * A_tdt;
  Vec rhs = (Mat::Identity(n, n) - (dt / 2) * A_t) * u + dt * 0.5 * (f_t + f_tdt);
  Eigen::PartialPivLU<Mat> lu(lhs);
  Vec up = lu.solve(rhs);
  double scale = rhs.norm();
  double resid = (lhs * up - rhs).norm();
  if (!(resid <= 1e-10 * std::max(scale, 1e-30)))
    throw Error("step_crank_nicolson: singular or ill-conditioned step");
  return up;
}

/// Energy bookkeeping for one run: the weighted norms of u and u_lambda per
/// step, the data functional, and the fitted constant
/// C = max_t ||u(t)||^2_{s1,s2-sigma} / (||g||^2_{s1,s2} + int ||f||^2).
struct EnergyReport {
  std::vector<double> t;
  std::vector<double> norm_u;        // ||u(t)||_{s1, s2 - sigma}
  std::vector<double> norm_ulambda;  // ||u_lambda(t)||_{s1, s2}
  std::vector<double> rhs;           // ||g||^2 + int_0^t ||f||^2 (trapezoid)
  std::vector<double> running_C;
  NormSpec spec;
  double sigma = 0;
  double fitted_C = 0;
  double fitted_C_secondary = std::numeric_limits<double>::quiet_NaN();
  int N = 0;
  double boundary_max = 0;
  double positivity_bound = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
  std::vector<Vec> trajectory;  // u at every step, original variable
  EnergyReport report;
};

/// Integrates the conjugated problem d_t u_lambda + A_lambda u_lambda =
/// W^{-1}(i f) with Crank-Nicolson, maps back u = W u_lambda, and assembles
/// the energy report with sigma = 2 M_{p-1} (overridable for diagnostics).
inline SolveResult solve(const CauchyProblem& prob, const ConjugationChain& chain,
                         const GridSpec& g, NormSpec spec, int steps,
                         std::optional<double> sigma_override = std::nullopt) {
  require(chain.N == g.N, "solve: chain built for a different grid");
  require(steps >= 1, "solve: need at least one step");

  const double sigma = sigma_override.value_or(chain.sigma());
  const double dt = prob.T / steps;
  const NormSpec loss_spec{spec.s1, spec.s2 - sigma};

  Vec gvec(g.N);
  for (int j = 0; j < g.N; ++j) gvec[j] = prob.g(g.x[j]);
  require(all_finite(gvec), "solve: datum has non-finite samples");
  if (boundary_fraction(gvec, g) > 1e-10)
    throw BoundaryMassError("solve: datum not negligible near the domain boundary");

  auto source = [&](double t) {
    Vec f = Vec::Zero(g.N);
    if (prob.has_source())
      for (int j = 0; j < g.N; ++j) f[j] = prob.f(t, g.x[j]);
    return f;
  };
  double g_norm2 = std::pow(weighted_sobolev_norm(gvec, spec, g), 2);
  auto f_norm2 = [&](double t) {
    if (!prob.has_source()) return 0.0;
    Vec f = source(t);
    return std::pow(weighted_sobolev_norm(f, spec, g), 2);
  };

  Vec ulam = chain.W_inv * gvec;

  SolveResult out;
  EnergyReport& rep = out.report;
  rep.spec = spec;
  rep.sigma = sigma;
  rep.N = g.N;

  // time-independent coefficients admit one factorization for all steps
  const bool constant = !prob.time_dependent;
  Mat A_lam;
  std::optional<Eigen::PartialPivLU<Mat>> lu;
  Mat rhs_mat;
  if (constant) {
    OperatorMatrix A = assemble_generator(prob, g, 0.0);
    A_lam = (chain.W_inv * A.A) * chain.W;
    lu.emplace(Mat::Identity(g.N, g.N) + (dt / 2) * A_lam);
    rhs_mat = Mat::Identity(g.N, g.N) - (dt / 2) * A_lam;
  }

  double integral_f = 0;
  double fn_prev = f_norm2(0.0);
  auto record = [&](int i, const Vec& ul) {
    double t = i * dt;
    Vec u = chain.W * ul;
    double bf = boundary_fraction(u, g);
    rep.boundary_max = std::max(rep.boundary_max, bf);
    if (bf > 1e-6)
      throw BoundaryMassError("solve: boundary mass above 1e-6 at t = " + std::to_string(t));
    rep.t.push_back(t);
    rep.norm_u.push_back(weighted_sobolev_norm(u, loss_spec, g));
    rep.norm_ulambda.push_back(weighted_sobolev_norm(ul, spec, g));
    rep.rhs.push_back(g_norm2 + integral_f);
    rep.running_C.push_back(rep.rhs.back() > 0 ? rep.norm_u.back() * rep.norm_u.back() / rep.rhs.back()
                                               : 0.0);
    out.trajectory.push_back(std::move(u));
  };
  record(0, ulam);

  for (int i = 0; i < steps; ++i) {
    double t = i * dt;
    Vec f_t = source(t), f_tdt = source(t + dt);
    Vec fl_t = prob.has_source() ? Vec(chain.W_inv * (kI * f_t).eval()) : Vec(Vec::Zero(g.N));
    Vec fl_tdt = prob.has_source() ? Vec(chain.W_inv * (kI * f_tdt).eval()) : Vec(Vec::Zero(g.N));
    if (constant) {
      Vec rhs = rhs_mat * ulam + dt * 0.5 * (fl_t + fl_tdt);
      Vec next = lu->solve(rhs);
      double resid = ((Mat::Identity(g.N, g.N) + (dt / 2) * A_lam) * next - rhs).norm();
      if (!(resid <= 1e-10 * std::max(rhs.norm(), 1e-30)))
        throw Error("solve: singular or ill-conditioned step at t = " + std::to_string(t));
      ulam = std::move(next);
    } else {
      OperatorMatrix At = assemble_generator(prob, g, t);
      OperatorMatrix Atdt = assemble_generator(prob, g, t + dt);
      Mat Al_t = (chain.W_inv * At.A) * chain.W;
      Mat Al_tdt = (chain.W_inv * Atdt.A) * chain.W;
      ulam = step_crank_nicolson(ulam, Al_t, Al_tdt, fl_t, fl_tdt, dt);
    }
    require(all_finite(ulam), "solve: state blew up (non-finite values)");
    double fn_next = f_norm2(t + dt);
    integral_f += dt * 0.5 * (fn_prev + fn_next);
    fn_prev = fn_next;
    record(i + 1, ulam);
  }

  rep.fitted_C = 0;
  for (double c : rep.running_C) rep.fitted_C = std::max(rep.fitted_C, c);
  return out;
}

struct VerifyResult {
  bool pass = false;
  double fitted_C = 0;
  double resolution_ratio = std::numeric_limits<double>::quiet_NaN();
  double margin = 0;  // C_cap - fitted_C
};

/// Pass iff the fitted constant is below the cap and, when a second
/// resolution was recorded, the two constants agree within ratio [0.8, 1.25].
inline VerifyResult verify_energy_estimate(const EnergyReport& rep, double C_cap) {
  VerifyResult v;
  v.fitted_C = rep.fitted_C;
  v.margin = C_cap - rep.fitted_C;
  bool stable = true;
  if (std::isfinite(rep.fitted_C_secondary) && rep.fitted_C_secondary > 0) {
    v.resolution_ratio = rep.fitted_C / rep.fitted_C_secondary;
    stable = v.resolution_ratio >= 0.8 && v.resolution_ratio <= 1.25;
  }
  v.pass = std::isfinite(rep.fitted_C) && rep.fitted_C <= C_cap && stable;
  return v;
}

}  // namespace pevo
