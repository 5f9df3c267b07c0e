#pragma once

#include "pevo/common.hpp"

namespace pevo {

/// Frequency cutoff data for the conjugator symbols. `sign` is the constant
/// sign of d_xi a_p on the right tail {xi >= R}; `sign_left` the one on the
/// left tail {xi <= -R}. For a_p = xi^p the tails differ when p is even, and
/// the cutoff must carry sgn(d_xi a_p) per tail for the first-order
/// correction d_xi a_p * d_x lambda to be nonnegative on both.
struct MollifierConfig {
  double R = 2.0;
  int sign = +1;
  int sign_left = +1;

  MollifierConfig() = default;
  MollifierConfig(double R_, int sign_) : R(R_), sign(sign_), sign_left(sign_) {
    require(R > 1, "MollifierConfig: R must exceed 1");
    require(sign_ == 1 || sign_ == -1, "MollifierConfig: sign must be +-1");
  }
  MollifierConfig(double R_, int sign_, int sign_left_)
      : R(R_), sign(sign_), sign_left(sign_left_) {
    require(R > 1, "MollifierConfig: R must exceed 1");
    require(std::abs(sign_) == 1 && std::abs(sign_left_) == 1,
            "MollifierConfig: signs must be +-1");
  }
};

namespace detail {

inline double bump_f(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }
inline double bump_fd(double s) { return s > 0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

/// theta(s) = f(s) / (f(s) + f(1-s)): exactly smooth monotone 0 -> 1 on [0,1].
inline double smooth_step(double s) {
  if (s <= 0) return 0;
  if (s >= 1) return 1;
  double a = bump_f(s), b = bump_f(1 - s);
  return a / (a + b);
}

inline double smooth_step_d1(double s) {
  if (s <= 0 || s >= 1) return 0;
  double a = bump_f(s), b = bump_f(1 - s);
  double ad = bump_fd(s), bd = bump_fd(1 - s);
  double den = a + b;
  return (ad * b + a * bd) / (den * den);
}

inline double bump_fdd(double s) {
  return s > 0 ? bump_f(s) * (1 - 2 * s) / (s * s * s * s) : 0.0;
}

inline double smooth_step_d2(double s) {
  if (s <= 0 || s >= 1) return 0;
  double u = bump_f(s), v = bump_f(1 - s);
  double up = bump_fd(s), vp = -bump_fd(1 - s);
  double upp = bump_fdd(s), vpp = bump_fdd(1 - s);
  double D = u + v;
  double N = up * v - u * vp;
  double Np = upp * v - u * vpp;
  double Dp = up + vp;
  return (Np * D - 2 * N * Dp) / (D * D * D);
}

}  // namespace detail

/// omega(xi/h): 0 for |xi/h| <= 1, the tail sign of d_xi a_p for
/// |xi/h| >= R, smooth monotone transition between.
inline double eval_omega(double xi, double h, const MollifierConfig& cfg) {
  double a = std::abs(xi) / h;
  int tail = (xi >= 0) ? cfg.sign : cfg.sign_left;
  if (a <= 1) return 0;
  if (a >= cfg.R) return tail;
  return tail * detail::smooth_step((a - 1) / (cfg.R - 1));
}

/// d/dxi of eval_omega (analytic).
inline double eval_omega_d1(double xi, double h, const MollifierConfig& cfg) {
  double a = std::abs(xi) / h;
  if (a <= 1 || a >= cfg.R) return 0;
  int tail = (xi >= 0) ? cfg.sign : cfg.sign_left;
  double ds = detail::smooth_step_d1((a - 1) / (cfg.R - 1)) / (cfg.R - 1);
  double da = (xi >= 0 ? 1.0 : -1.0) / h;
  return tail * ds * da;
}

/// d^2/dxi^2 of eval_omega (analytic).
inline double eval_omega_d2(double xi, double h, const MollifierConfig& cfg) {
  double a = std::abs(xi) / h;
  if (a <= 1 || a >= cfg.R) return 0;
  int tail = (xi >= 0) ? cfg.sign : cfg.sign_left;
  double w = h * (cfg.R - 1);
  return tail * detail::smooth_step_d2((a - 1) / (cfg.R - 1)) / (w * w);
}

/// psi: 1 on |y| <= 1/2, 0 on |y| >= 1, smooth monotone in between.
inline double eval_psi(double y) {
  double a = std::abs(y);
  if (a <= 0.5) return 1;
  if (a >= 1) return 0;
  return detail::smooth_step(2 * (1 - a));
}

inline double eval_psi_d1(double y) {
  double a = std::abs(y);
  if (a <= 0.5 || a >= 1) return 0;
  double ds = detail::smooth_step_d1(2 * (1 - a)) * (-2.0);
  return ds * (y >= 0 ? 1.0 : -1.0);
}

}  // namespace pevo
