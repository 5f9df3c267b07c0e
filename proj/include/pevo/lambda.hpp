#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "pevo/mollifier.hpp"
#include "pevo/quadrature.hpp"
#include "pevo/symbol.hpp"

namespace pevo {

/// One conjugator symbol lambda_{p-k}. Step k = 1 is the logarithmic-weight
/// symbol M * omega(xi/h) * asinh(x); steps k >= 2 carry the cut-off
/// x-integral with the psi localization and saturate for <x> >= <xi>_h^{p-1}.
/// All are real valued and vanish for |xi| <= h.
struct LambdaSymbol {
  int k = 1;
  int p = 2;
  double M = 0;
  double h = 1;
  MollifierConfig cfg;
  Symbol sym;

  cplx operator()(double t, double x, double xi) const { return sym(t, x, xi); }
};

namespace detail {

// asinh and its first four derivatives
inline double asinh_d(int b, double x) {
  double r2 = 1.0 + x * x;
  switch (b) {
    case 0: return std::asinh(x);
    case 1: return 1.0 / std::sqrt(r2);
    case 2: return -x / (r2 * std::sqrt(r2));
    case 3: return (2 * x * x - 1) / (r2 * r2 * std::sqrt(r2));
    case 4: return (9 * x - 6 * x * x * x) / (r2 * r2 * r2 * std::sqrt(r2));
    default: throw Error("asinh_d: derivative order beyond 4");
  }
}

// omega(xi/h) derivatives in xi: analytic to second order, differences of
// the analytic second derivative above that.
inline double omega_d(int a, double xi, double h, const MollifierConfig& cfg) {
  if (a == 0) return eval_omega(xi, h, cfg);
  if (a == 1) return eval_omega_d1(xi, h, cfg);
  if (a == 2) return eval_omega_d2(xi, h, cfg);
  double step = 0.01 * h * (cfg.R - 1);
  return fd_apply([&](double z) { return cplx(eval_omega_d2(z, h, cfg)); }, a - 2, xi, step)
      .real();
}

}  // namespace detail

/// lambda_{p-1}(x, xi) = M * omega(xi/h) * int_0^x dy/<y>, with the integral
/// in closed form: asinh(x) = log(x + sqrt(1+x^2)).
inline LambdaSymbol lambda_top(double M, int p, double h, const MollifierConfig& cfg) {
  require(M >= 0, "lambda_top: M must be nonnegative");
  require(h >= 1, "lambda_top: h must be >= 1");
  LambdaSymbol ls;
  ls.k = 1;
  ls.p = p;
  ls.M = M;
  ls.h = h;
  ls.cfg = cfg;
  auto ev = [M, h, cfg](double, double x, double xi) -> cplx {
    return M * eval_omega(xi, h, cfg) * std::asinh(x);
  };
  auto dv = [M, h, cfg](int a, int b, double, double x, double xi) -> cplx {
    return M * detail::omega_d(a, xi, h, cfg) * detail::asinh_d(b, x);
  };
  ls.sym = Symbol({0, 0}, ev, dv, 8, false);
  ls.sym.fd_step_xi = 0.02 * h * (cfg.R - 1);
  return ls;
}

/// lambda_{p-k}(x, xi), 2 <= k <= p-1:
///   M * omega(xi/h) * <xi>_h^{1-k} * int_0^x <y>^{-(p-k)/(p-1)}
///                                             psi(<y>/<xi>_h^{p-1}) dy.
/// The x-integral runs on composite 48-point Gauss-Legendre panels of width 1,
/// cached per xi value (the integrand is even, so only x >= 0 is stored).
inline LambdaSymbol lambda_lower(int k, double M, int p, double h,
                                 const MollifierConfig& cfg) {
  require(k >= 2 && k <= p - 1, "lambda_lower: need 2 <= k <= p-1");
  require(M >= 0, "lambda_lower: M must be nonnegative");
  require(h >= 1, "lambda_lower: h must be >= 1");
  LambdaSymbol ls;
  ls.k = k;
  ls.p = p;
  ls.M = M;
  ls.h = h;
  ls.cfg = cfg;

  double q = double(p - k) / double(p - 1);
  struct Cache {
    std::mutex mtx;
    std::map<double, std::shared_ptr<PanelPrimitive>> table;
  };
  auto cache = std::make_shared<Cache>();

  auto primitive = [cache, q, p, h](double xi) {
    std::lock_guard<std::mutex> lock(cache->mtx);
    auto it = cache->table.find(xi);
    if (it == cache->table.end()) {
      double rho = jbh(xi, h);
      double cut = std::pow(rho, double(p - 1));
      auto f = [q, cut](double y) { return std::pow(jb(y), -q) * eval_psi(jb(y) / cut); };
      it = cache->table.emplace(xi, std::make_shared<PanelPrimitive>(f, 48)).first;
    }
    return it->second;
  };

  // int_0^x, odd in x
  auto integral = [primitive](double x, double xi) {
    double v = primitive(xi)->eval(std::abs(x));
    return x >= 0 ? v : -v;
  };

  // smooth factor g(x,xi) = M <xi>_h^{1-k} int_0^x ... (omega split off so a
  // Leibniz rule can route the boundary-layer xi-derivatives through the
  // analytic omega forms); x-derivatives closed to second order
  auto g_part = [=](int b, double x, double xi) -> double {
    double rho = jbh(xi, h);
    double pref = M * std::pow(rho, 1.0 - k);
    double cut = std::pow(rho, double(p - 1));
    double w = jb(x);
    switch (b) {
      case 0: return pref * integral(x, xi);
      case 1: return pref * std::pow(w, -q) * eval_psi(w / cut);
      case 2: {
        double dw = x / w;  // d<x>/dx
        double t1 = -q * std::pow(w, -q - 1) * eval_psi(w / cut);
        double t2 = std::pow(w, -q) * eval_psi_d1(w / cut) / cut;
        return pref * dw * (t1 + t2);
      }
      default: throw Error("lambda_lower: x-derivative depth beyond 2");
    }
  };
  // d^m/dxi^m of g: smooth in xi (scale ~ <xi>_h), plain differences
  auto g_xi = [g_part, h](int m, int b, double x, double xi) -> double {
    if (m == 0) return g_part(b, x, xi);
    double step = 0.02 * jbh(xi, h);
    return detail::fd_apply([&](double z) { return cplx(g_part(b, x, z)); }, m, xi, step)
        .real();
  };

  auto dv = std::make_shared<std::function<cplx(int, int, double, double, double)>>();
  *dv = [=, dvw = std::weak_ptr<std::function<cplx(int, int, double, double, double)>>(dv)](
            int a, int b, double t, double x, double xi) -> cplx {
    auto self = dvw.lock();
    if (b > 2) {
      return detail::fd_apply([&](double xx) { return (*self)(a, 2, t, xx, xi); }, b - 2, x,
                              1e-3);
    }
    double acc = 0;
    double binom = 1;
    for (int i = 0; i <= a; ++i) {
      double om = detail::omega_d(i, xi, h, cfg);
      if (om != 0.0) acc += binom * om * g_xi(a - i, b, x, xi);
      binom = binom * (a - i) / (i + 1);
    }
    return cplx(acc);
  };

  auto ev = [g_part, h, cfg](double, double x, double xi) -> cplx {
    double om = eval_omega(xi, h, cfg);
    return cplx(om == 0.0 ? 0.0 : om * g_part(0, x, xi));
  };
  auto dv_fn = [dv](int a, int b, double t, double x, double xi) {
    return (*dv)(a, b, t, x, xi);
  };
  ls.sym = Symbol({0, 0}, ev, dv_fn, 8, false);
  ls.sym.fd_step_xi = 0.02 * h * (cfg.R - 1);
  return ls;
}

namespace detail {

/// Even C^inf plateau: 1 on |v| <= flat, 0 on |v| >= zero. Analytic first
/// and second derivatives, differences beyond.
inline Symbol plateau_symbol(double flat, double zero, bool in_x) {
  require(zero > flat && flat > 0, "plateau_symbol: need 0 < flat < zero");
  double w = zero - flat;
  auto val = [flat, zero, w](double v) {
    double av = std::abs(v);
    if (av <= flat) return 1.0;
    if (av >= zero) return 0.0;
    return smooth_step((zero - av) / w);
  };
  auto d1 = [flat, zero, w](double v) {
    double av = std::abs(v);
    if (av <= flat || av >= zero) return 0.0;
    return smooth_step_d1((zero - av) / w) * (-1.0 / w) * (v >= 0 ? 1.0 : -1.0);
  };
  auto d2 = [flat, zero, w](double v) {
    double av = std::abs(v);
    if (av <= flat || av >= zero) return 0.0;
    return smooth_step_d2((zero - av) / w) / (w * w);
  };
  auto dn = [val, d1, d2, w](int n, double v) -> double {
    if (n == 0) return val(v);
    if (n == 1) return d1(v);
    if (n == 2) return d2(v);
    return fd_apply([&](double z) { return cplx(d2(z)); }, n - 2, v, 0.05 * w).real();
  };
  auto ev = [val, in_x](double, double x, double xi) { return cplx(val(in_x ? x : xi)); };
  auto dv = [dn, in_x](int a, int b, double, double x, double xi) -> cplx {
    if (in_x) return a == 0 ? cplx(dn(b, x)) : cplx(0.0);
    return b == 0 ? cplx(dn(a, xi)) : cplx(0.0);
  };
  return Symbol({0, 0}, ev, dv, 8, false);
}

}  // namespace detail

/// Grid realization of a conjugator symbol: the paper's lambda lives on R^2,
/// but exponential weights with <x>-growth wrap discontinuously on the
/// truncated periodic box and the two omega tails collide at the shared
/// Nyquist bin. Flattening lambda smoothly near the spatial boundary and
/// near the frequency seam keeps the operator compositions clean; solutions
/// are required to stay clear of both regions anyway.
inline LambdaSymbol grid_mollified(const LambdaSymbol& ls, const GridSpec& g) {
  if (ls.M <= 0) return ls;
  Symbol eta = detail::plateau_symbol(0.4 * g.L, 0.95 * g.L, true);
  Symbol zeta = detail::plateau_symbol(0.7 * g.xi_max(), 0.95 * g.xi_max(), false);
  LambdaSymbol out = ls;
  out.sym = product_symbol(product_symbol(ls.sym, eta), zeta);
  return out;
}

/// e^{sgn * lambda}(x, xi) as a symbol. x-derivatives use the exponential
/// Bell-polynomial forms over lambda's partials; xi-derivatives reduce to
/// differences of those. Order (0, M) for the k = 1 step, (0, 0) otherwise.
inline Symbol exp_lambda(const LambdaSymbol& ls, int sgn) {
  require(sgn == 1 || sgn == -1, "exp_lambda: sign must be +-1");
  Symbol lam = ls.sym;
  double s = double(sgn);
  SymbolOrder order{0, ls.k == 1 ? ls.M : 0.0};

  auto xderiv = [lam, s](int b, double t, double x, double xi) -> cplx {
    cplx w = std::exp(s * lam(t, x, xi));
    if (b == 0) return w;
    cplx g1 = s * lam.deriv(0, 1, t, x, xi);
    if (b == 1) return g1 * w;
    cplx g2 = s * lam.deriv(0, 2, t, x, xi);
    if (b == 2) return (g2 + g1 * g1) * w;
    cplx g3 = s * lam.deriv(0, 3, t, x, xi);
    if (b == 3) return (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * w;
    cplx g4 = s * lam.deriv(0, 4, t, x, xi);
    if (b == 4)
      return (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1 * g1 * g1 * g1) * w;
    throw Error("exp_lambda: x-derivative order beyond 4");
  };

  double xi_step = 0.02 * ls.h * (ls.cfg.R - 1);
  auto dv = [xderiv, lam, s, xi_step](int a, int b, double t, double x, double xi) -> cplx {
    if (a == 0) return xderiv(b, t, x, xi);
    if (a + b <= 2) {  // chain rule through lambda's oracle
      cplx w = std::exp(s * lam(t, x, xi));
      cplx l10 = s * lam.deriv(1, 0, t, x, xi);
      if (a == 1 && b == 0) return l10 * w;
      if (a == 2 && b == 0) {
        cplx l20 = s * lam.deriv(2, 0, t, x, xi);
        return (l20 + l10 * l10) * w;
      }
      cplx l01 = s * lam.deriv(0, 1, t, x, xi);
      cplx l11 = s * lam.deriv(1, 1, t, x, xi);
      return (l11 + l10 * l01) * w;  // a = b = 1
    }
    return detail::fd_apply([&](double z) { return xderiv(b, t, x, z); }, a, xi, xi_step);
  };
  auto ev = [lam, s](double t, double x, double xi) -> cplx {
    return std::exp(s * lam(t, x, xi));
  };
  Symbol sym(order, ev, dv, 8, false);
  sym.fd_step_xi = xi_step;
  return sym;
}

}  // namespace pevo
