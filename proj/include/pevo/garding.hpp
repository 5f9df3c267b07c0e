#pragma once

#include <Eigen/Eigenvalues>

#include "pevo/quantize.hpp"

namespace pevo {

/// Herm(A) = (A + A*) / 2, so that 2 Re<Au,u> = <(A + A*)u, u>.
inline OperatorMatrix hermitian_part(const OperatorMatrix& A) {
  require(A.A.rows() == A.A.cols(), "hermitian_part: matrix not square");
  OperatorMatrix out;
  out.A = 0.5 * (A.A + A.A.adjoint());
  out.N = A.N;
  out.provenance = A.provenance + " herm";
  return out;
}

inline double min_hermitian_eigenvalue(const OperatorMatrix& A) {
  OperatorMatrix H = hermitian_part(A);
  if (!H.A.allFinite()) throw Error("min_hermitian_eigenvalue: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Mat> es(H.A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error("min_hermitian_eigenvalue: eigensolve failed");
  return es.eigenvalues().minCoeff();
}

/// Min eigenvalue of the Hermitian part compressed to the fixed frequency
/// window |xi| <= xi_window. Grids at different N over the same box share
/// their frequency lattice, so the window spans the same mode class at both
/// resolutions: semiboundedness is verified on a fixed function class while
/// the discretization refines. (The full matrix also carries seam modes the
/// grid cannot conjugate; those stay out of the verification.)
inline double min_hermitian_eigenvalue_window(const OperatorMatrix& A, const GridSpec& g,
                                              double xi_window) {
  require(A.N == g.N, "min_hermitian_eigenvalue_window: grid mismatch");
  OperatorMatrix H = hermitian_part(A);
  if (!H.A.allFinite()) throw Error("min_hermitian_eigenvalue_window: non-finite entries");
  std::vector<int> sel;
  for (int k = 0; k < g.N; ++k)
    if (std::abs(g.xi[k]) <= xi_window) sel.push_back(k);
  require(!sel.empty(), "min_hermitian_eigenvalue_window: empty window");
  double s = 1.0 / std::sqrt(double(g.N));
  Mat B(g.N, Eigen::Index(sel.size()));
  for (size_t c = 0; c < sel.size(); ++c)
    for (int j = 0; j < g.N; ++j)
      B(j, Eigen::Index(c)) = s * std::polar(1.0, g.x[j] * g.xi[sel[c]]);
  Mat Hw = B.adjoint() * H.A * B;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hw + Hw.adjoint()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error("min_hermitian_eigenvalue_window: eigensolve failed");
  return es.eigenvalues().minCoeff();
}

/// Two-resolution semiboundedness report for the conjugated generator.
struct PositivityReport {
  double lower_bound = 0;  // windowed min eigenvalue of Herm(A) at the finer grid
  double lower_bound_coarse = 0;
  int N1 = 0, N2 = 0;
  double xi_window = 0;
  double stability_ratio = 0;  // |b(N2) - b(N1)| / (1 + |b(N1)|)
  double c_max = 0;
  bool pass = false;
};

/// Hermitian eigensolves at two resolutions (N2 = 2 N1 expected) over a
/// shared frequency window (default: the coarse grid's resolved band);
/// pass iff the fine bound is above -c_max and stable within 20%.
inline PositivityReport positivity_check(const OperatorMatrix& A_coarse,
                                         const GridSpec& g_coarse,
                                         const OperatorMatrix& A_fine,
                                         const GridSpec& g_fine, double c_max,
                                         double xi_window = 0) {
  PositivityReport r;
  r.N1 = A_coarse.N;
  r.N2 = A_fine.N;
  r.c_max = c_max;
  r.xi_window = xi_window > 0 ? xi_window : 0.6 * g_coarse.xi_max();
  r.lower_bound_coarse = min_hermitian_eigenvalue_window(A_coarse, g_coarse, r.xi_window);
  r.lower_bound = min_hermitian_eigenvalue_window(A_fine, g_fine, r.xi_window);
  r.stability_ratio =
      std::abs(r.lower_bound - r.lower_bound_coarse) / (1 + std::abs(r.lower_bound_coarse));
  r.pass = (r.lower_bound >= -c_max) && (r.stability_ratio <= 0.2);
  return r;
}

}  // namespace pevo
