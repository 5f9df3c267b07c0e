#pragma once

#include <functional>
#include <vector>

#include "pevo/symbol.hpp"

namespace pevo {

/// Which decay hypotheses the coefficients are certified against.
///   full:         a_j in SG^{j, -j/(p-1)} (real and imaginary parts)
///   refined:      Re a_j in SG^{j,0}, Im a_j in SG^{j, -j/(p-1)}
///   strengthened: as full, but a_{p-1} in SG^{p-1, -(1+eps)}
enum class HypothesisMode { full, refined, strengthened };

inline const char* to_string(HypothesisMode m) {
  switch (m) {
    case HypothesisMode::full: return "full";
    case HypothesisMode::refined: return "refined";
    case HypothesisMode::strengthened: return "strengthened";
  }
  return "?";
}

/// D_t u + a_p(t,D) u + sum_j a_j(t,x,D) u = f,  u(0) = g.
struct CauchyProblem {
  int p = 2;
  Symbol a_p;                                  // xi-only, real valued
  std::vector<Symbol> a_lower;                 // index j = 0..p-1
  std::function<cplx(double, double)> f;       // f(t, x); null means zero
  std::function<cplx(double)> g;               // datum
  double T = 1.0;
  HypothesisMode mode = HypothesisMode::full;
  bool time_dependent = false;
  double strengthened_eps = 0.5;

  bool has_source() const { return bool(f); }

  std::vector<double> time_samples(int n = 9) const {
    if (!time_dependent) return {0.0};
    std::vector<double> ts;
    for (int i = 0; i < n; ++i) ts.push_back(T * i / double(n - 1));
    return ts;
  }
};

}  // namespace pevo
