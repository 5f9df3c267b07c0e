#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "pevo/common.hpp"

namespace pevo {

/// Uniform truncation of the line to [-L, L) with its discrete Fourier dual.
///
/// Nodes x_j = -L + j*dx, dx = 2L/N. Frequencies xi_k = pi*k/L for
/// k = -N/2 .. N/2-1, stored in FFT bin order (0,1,...,N/2-1,-N/2,...,-1).
/// The transform below is unitary on C^N so Parseval holds exactly; all
/// norms carry the dx measure factor.
struct GridSpec {
  double L = 0;
  int N = 0;
  double h = 1;  // calculus weight parameter of <xi>_h; norms always use h = 1
  double dx = 0;

  std::vector<double> x;      // nodes, natural order
  std::vector<double> xi;     // frequencies, FFT bin order
  std::vector<double> wx;     // <x_j>
  std::vector<double> wxi;    // <xi_k>
  std::vector<double> wxi_h;  // <xi_k>_h

  double xi_max() const { return kPi * N / (2.0 * L); }
};

struct NormSpec {
  double s1 = 0;  // Sobolev regularity index
  double s2 = 0;  // weight / decay index
};

inline GridSpec make_grid(double L, int N, double h) {
  if (!(L > 0)) throw Error("make_grid: L must be positive");
  if (N % 2 != 0) throw Error("make_grid: N must be even");
  if (N < 16) throw Error("make_grid: N too small (need N >= 16)");
  if (!(h >= 1)) throw Error("make_grid: h must be >= 1");

  GridSpec g;
  g.L = L;
  g.N = N;
  g.h = h;
  g.dx = 2.0 * L / N;
  g.x.resize(N);
  g.xi.resize(N);
  g.wx.resize(N);
  g.wxi.resize(N);
  g.wxi_h.resize(N);
  for (int j = 0; j < N; ++j) {
    g.x[j] = -L + j * g.dx;
    g.wx[j] = jb(g.x[j]);
  }
  for (int k = 0; k < N; ++k) {
    int m = (k < N / 2) ? k : k - N;
    g.xi[k] = kPi * m / L;
    g.wxi[k] = jb(g.xi[k]);
    g.wxi_h[k] = jbh(g.xi[k], h);
  }
  return g;
}

namespace detail {

// FFTW plans are cached per size; creation is not thread-safe, execution on
// fresh arrays is. Plans use FFTW_UNALIGNED so they run on any buffer.
struct FftPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

inline FftPlans& fft_plans(int N) {
  static std::map<int, FftPlans> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(N);
  if (it == cache.end()) {
    std::vector<cplx> a(N), b(N);
    FftPlans p;
    p.fwd = fftw_plan_dft_1d(N, reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_1d(N, reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    it = cache.emplace(N, p).first;
  }
  return it->second;
}

inline void fft_exec(fftw_plan plan, const Vec& in, Vec& out) {
  Vec tmp = in;  // FFTW may not accept const input
  out.resize(in.size());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Unitary forward transform: (Fu)_k = N^{-1/2} sum_j u_j exp(-i x_j xi_k).
/// The node offset -L contributes the (-1)^k phase relative to a raw DFT.
inline Vec forward_fft(const Vec& u, const GridSpec& g) {
  require(u.size() == g.N, "forward_fft: state length != grid N");
  Vec out;
  detail::fft_exec(detail::fft_plans(g.N).fwd, u, out);
  double s = 1.0 / std::sqrt(double(g.N));
  for (int k = 0; k < g.N; ++k) out[k] *= (k % 2 == 0) ? s : -s;
  return out;
}

inline Vec inverse_fft(const Vec& U, const GridSpec& g) {
  require(U.size() == g.N, "inverse_fft: state length != grid N");
  Vec tmp = U;
  double s = 1.0 / std::sqrt(double(g.N));
  for (int k = 0; k < g.N; ++k) tmp[k] *= (k % 2 == 0) ? s : -s;
  Vec out;
  detail::fft_exec(detail::fft_plans(g.N).bwd, tmp, out);
  return out;
}

/// Discrete L2 norm sqrt(dx * sum |u_j|^2).
inline double l2_norm(const Vec& u, const GridSpec& g) {
  require(u.size() == g.N, "l2_norm: state length != grid N");
  return std::sqrt(g.dx) * u.norm();
}

/// Applies the Fourier multiplier m(xi): u -> F^{-1}( m(xi_k) (Fu)_k ).
inline Vec fourier_multiplier(const Vec& u,
                              const std::function<cplx(double)>& m,
                              const GridSpec& g) {
  require(u.size() == g.N, "fourier_multiplier: state length != grid N");
  Vec U = forward_fft(u, g);
  for (int k = 0; k < g.N; ++k) {
    cplx mv = m(g.xi[k]);
    if (!is_finite(mv)) throw Error("fourier_multiplier: non-finite multiplier value");
    U[k] *= mv;
  }
  return inverse_fft(U, g);
}

/// || <x>^{s2} <D>^{s1} u ||_{L2}, with <D>^{s1} realized as the Fourier
/// multiplier <xi>^{s1} (h = 1 regardless of the calculus weight).
inline double weighted_sobolev_norm(const Vec& u, NormSpec s, const GridSpec& g) {
  require(u.size() == g.N, "weighted_sobolev_norm: state length != grid N");
  Vec U = forward_fft(u, g);
  if (s.s1 != 0.0) {
    for (int k = 0; k < g.N; ++k) U[k] *= std::pow(g.wxi[k], s.s1);
  }
  Vec v = inverse_fft(U, g);
  double acc = 0;
  for (int j = 0; j < g.N; ++j) {
    double w = (s.s2 == 0.0) ? 1.0 : std::pow(g.wx[j], s.s2);
    acc += std::norm(v[j] * w);
  }
  return std::sqrt(g.dx * acc);
}

/// Relative amount of |u| living in the outer `band` fraction of the domain.
inline double boundary_fraction(const Vec& u, const GridSpec& g, double band = 0.05) {
  require(u.size() == g.N, "boundary_fraction: state length != grid N");
  double peak = 0, edge = 0;
  double cut = g.L * (1.0 - band);
  for (int j = 0; j < g.N; ++j) {
    double a = std::abs(u[j]);
    peak = std::max(peak, a);
    if (std::abs(g.x[j]) >= cut) edge = std::max(edge, a);
  }
  return peak > 0 ? edge / peak : 0.0;
}

}  // namespace pevo
