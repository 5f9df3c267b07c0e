#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pevo/common.hpp"

namespace pevo {

struct QuadRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre nodes/weights by Newton iteration on P_n. Cached per n.
inline const QuadRule& gauss_legendre(int n) {
  static std::map<int, QuadRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      // recurrence for P_n(x) and P_n'(x)
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

/// Composite Gauss-Legendre primitive F(x) = int_0^x f, built from fixed
/// panels of width 1 with `points` nodes each. Panel prefix sums are grown
/// lazily, so repeated evaluations along a ray share work. Intended for the
/// x-integrals of the conjugator symbols, keyed per xi by the caller.
class PanelPrimitive {
 public:
  PanelPrimitive(std::function<double(double)> f, int points = 32, double width = 1.0)
      : f_(std::move(f)), points_(points), width_(width) {}

  /// int_0^x f(y) dy for x >= 0 (caller handles odd/even extension).
  double eval(double x) const {
    if (!(x > 0)) return 0;
    int full = int(std::floor(x / width_));
    extend(full);
    double acc = full > 0 ? prefix_[full - 1] : 0.0;
    acc += panel(full * width_, x);
    return acc;
  }

 private:
  void extend(int panels) const {
    while (int(prefix_.size()) < panels) {
      double a = double(prefix_.size()) * width_;
      double s = panel(a, a + width_);
      prefix_.push_back((prefix_.empty() ? 0.0 : prefix_.back()) + s);
    }
  }

  double panel(double a, double b) const {
    if (!(b > a)) return 0;
    const QuadRule& q = gauss_legendre(points_);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0;
    for (size_t i = 0; i < q.nodes.size(); ++i)
      acc += q.weights[i] * f_(mid + half * q.nodes[i]);
    return acc * half;
  }

  std::function<double(double)> f_;
  int points_;
  double width_;
  mutable std::vector<double> prefix_;
};

}  // namespace pevo
