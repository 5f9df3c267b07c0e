#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pevo {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr cplx kI{0.0, 1.0};

/// <v> = sqrt(1 + v^2)
inline double jb(double v) { return std::sqrt(1.0 + v * v); }

/// <v>_h = sqrt(h^2 + v^2)
inline double jbh(double v, double h) { return std::sqrt(h * h + v * v); }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hypothesis certification / calibration failures map to dedicated CLI exit codes.
struct HypothesisViolation : Error {
  using Error::Error;
};
struct UnderResolved : Error {
  using Error::Error;
};
struct CalibrationFailure : Error {
  using Error::Error;
};
struct BoundaryMassError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Deterministic RNG (splitmix64). The standard distributions are
// implementation-defined, so bits are mapped to doubles by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  cplx unit_complex() {
    double re = 2.0 * uniform() - 1.0;
    double im = 2.0 * uniform() - 1.0;
    return {re, im};
  }

 private:
  std::uint64_t state_;
};

inline bool is_finite(cplx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline bool all_finite(const Vec& u) {
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (!is_finite(u[i])) return false;
  return true;
}

}  // namespace pevo
