#pragma once

// Independent reference computations used to freeze expected values; these
// deliberately avoid the algorithms used by the library.

#include "fluidq/types.hpp"

#include <Eigen/QR>

namespace fluidq::oracle {

// Truncated Taylor series of e^{A t}.
inline Mat taylor_expm(const Mat& a, double t, int terms = 60) {
  Mat term = Mat::Identity(a.rows(), a.rows());
  Mat sum = term;
  for (int k = 1; k <= terms; ++k) {
    term = term * a * (t / k);
    sum += term;
  }
  return sum;
}

// Sylvester solution via the vectorized linear system in row-major unknown
// order, solved with a rank-revealing QR (the library uses LU / Schur).
inline Mat kron_sylvester(const Mat& a, const Mat& b, const Mat& c) {
  const Eigen::Index m = a.rows(), n = b.rows();
  Mat big = Mat::Zero(m * n, m * n);
  Vec rhs(m * n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = j * m + i;  // column-major unknown order
      for (Eigen::Index k = 0; k < m; ++k) big(row, j * m + k) += a(i, k);
      for (Eigen::Index l = 0; l < n; ++l) big(row, l * m + i) += b(l, j);
      rhs(row) = -c(i, j);
    }
  Vec x = Eigen::ColPivHouseholderQR<Mat>(big).solve(rhs);
  Mat out(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = x(j * m + i);
  return out;
}

// Stationary vector by power iteration on the uniformized chain.
inline RowVec power_stationary(const Mat& g, int iters = 200000, double tol = 1e-14) {
  const Eigen::Index n = g.rows();
  double theta = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) theta = std::max(theta, -g(i, i));
  Mat p = Mat::Identity(n, n) + g / (1.5 * theta);
  RowVec v = RowVec::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < iters; ++it) {
    RowVec w = v * p;
    w /= w.sum();
    if ((w - v).cwiseAbs().maxCoeff() < tol) return w;
    v = w;
  }
  return v;
}

}  // namespace fluidq::oracle
