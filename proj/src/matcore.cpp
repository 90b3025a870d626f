#include "fluidq/matcore.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <sstream>

namespace fluidq {

namespace detail {

double inf_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

using detail::inf_norm;

GeneratorCheck check_generator(const Mat& a, double tol) {
  GeneratorCheck out;
  if (a.rows() != a.cols()) return out;
  bool offdiag_ok = true;
  double max_abs = 0.0, max_signed = -std::numeric_limits<double>::infinity();
  if (a.rows() == 0) {
    out.is_generator = out.is_subgenerator = true;
    return out;
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      sum += a(i, j);
      if (i != j && a(i, j) < -tol) offdiag_ok = false;
    }
    max_abs = std::max(max_abs, std::abs(sum));
    max_signed = std::max(max_signed, sum);
  }
  out.max_row_sum_abs = max_abs;
  out.is_generator = offdiag_ok && max_abs <= tol;
  out.is_subgenerator = offdiag_ok && max_signed <= tol;
  return out;
}

RowVec stationary_vector(const Mat& g, const SolverOptions& opts) {
  const Eigen::Index n = g.rows();
  if (g.cols() != n) throw InvalidBlocks("stationary_vector: matrix is not square");
  if (n == 0) return RowVec(0);
  const GeneratorCheck chk = check_generator(g, opts.generator_tol);
  if (!chk.is_generator) {
    std::ostringstream msg;
    msg << "stationary_vector: not a generator (max |row sum| = " << chk.max_row_sum_abs << ")";
    throw NotAGenerator(msg.str());
  }

  // Augment v G = 0 with the normalization v e = 1 and solve the stacked
  // least-squares system; a rank defect means the normalized solution is
  // not unique.
  Mat m(n + 1, n);
  m.topRows(n) = g.transpose();
  m.row(n).setOnes();
  Eigen::ColPivHouseholderQR<Mat> qr(m);
  if (qr.rank() < n) throw Reducible("stationary_vector: stationary vector is not unique");
  Vec rhs = Vec::Zero(n + 1);
  rhs(n) = 1.0;
  Vec v = qr.solve(rhs);

  v = v.cwiseMax(0.0);
  const double total = v.sum();
  if (!(total > 0.0)) throw Reducible("stationary_vector: degenerate solution");
  v /= total;
  RowVec out = v.transpose();

  const double resid = (out * g).cwiseAbs().maxCoeff();
  const double scale = std::max(inf_norm(g), 1.0);
  if (resid > 1e-12 * scale)
    throw Reducible("stationary_vector: residual too large, generator is numerically reducible");
  return out;
}

namespace {

// Uniformized exponential of a (sub)generator: series in P = I + A/theta with
// Poisson weights, scaled so theta*tau <= 1, then repeated squaring. All
// intermediate matrices are entrywise nonnegative, so the result is too.
Mat expm_uniformized(const Mat& a, double t) {
  const Eigen::Index n = a.rows();
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) theta = std::max(theta, -a(i, i));
  if (theta * t == 0.0) {
    // Diagonal-free (sub)generators are all-zero; e^{0} = I.
    return Mat::Identity(n, n);
  }

  int squarings = 0;
  double tau = t;
  while (theta * tau > 1.0) {
    tau *= 0.5;
    ++squarings;
  }

  // Uniformization rate q = 1/tau >= theta, so P = I + A/q = I + A*tau is
  // substochastic. Rounding can leave tiny negative off-diagonals; clamp them.
  Mat p = Mat::Identity(n, n) + a * tau;
  p = p.cwiseMax(0.0);

  // e^{A tau} = sum_k e^{-q tau} (q tau)^k / k! P^k with q tau = 1.
  const double lambda = 1.0;
  double weight = std::exp(-lambda);
  Mat term = Mat::Identity(n, n);
  Mat sum = weight * term;
  double tail = 1.0 - weight;
  for (int k = 1; k <= 64 && tail > 1e-18; ++k) {
    term = term * p;
    weight *= lambda / k;
    sum += weight * term;
    tail -= weight;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Scaling-and-squaring with a [13/13] Pade approximant for general matrices.
Mat expm_pade(const Mat& a) {
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;
  const Eigen::Index n = a.rows();
  const double norm1 = a.size() ? a.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Mat as = a / std::ldexp(1.0, s);

  const Mat a2 = as * as;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat id = Mat::Identity(n, n);
  Mat u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
          b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Mat r = (v - u).lu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

}  // namespace

Mat expm(const Mat& a, double t, const SolverOptions& opts) {
  if (a.rows() != a.cols()) throw InvalidBlocks("expm: matrix is not square");
  if (!(t >= 0.0)) throw std::invalid_argument("expm: t must be nonnegative");
  if (a.size() && !a.allFinite()) throw std::invalid_argument("expm: non-finite entries");
  if (a.rows() == 0) return Mat(0, 0);
  if (t == 0.0) return Mat::Identity(a.rows(), a.rows());
  // Route through uniformization whenever the matrix is structurally a
  // sub-generator; rounding must never push probabilities negative.
  if (check_generator(a, std::max(opts.generator_tol, 1e-9)).is_subgenerator)
    return expm_uniformized(a, t);
  return expm_pade(a * t);
}

namespace {

Mat sylvester_kron(const Mat& a, const Mat& b, const Mat& c) {
  const Eigen::Index m = a.rows(), n = b.rows();
  Mat big = Mat::Zero(m * n, m * n);
  Vec rhs(m * n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = i * n + j;
      for (Eigen::Index k = 0; k < m; ++k) big(row, k * n + j) += a(i, k);
      for (Eigen::Index l = 0; l < n; ++l) big(row, i * n + l) += b(l, j);
      rhs(row) = -c(i, j);
    }
  Eigen::FullPivLU<Mat> lu(big);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
    throw SingularPencil("solve_sylvester: spectra of A and -B intersect");
  Vec x = lu.solve(rhs);
  Mat out(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = x(i * n + j);
  return out;
}

Mat sylvester_schur(const Mat& a, const Mat& b, const Mat& c) {
  using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index m = a.rows(), n = b.rows();
  Eigen::ComplexSchur<Eigen::MatrixXd> sa(Eigen::MatrixXd(a), true);
  Eigen::ComplexSchur<Eigen::MatrixXd> sb(Eigen::MatrixXd(b), true);
  if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
    throw NoConvergence("solve_sylvester: Schur decomposition failed");
  const CMat ta = sa.matrixT(), qa = sa.matrixU();
  const CMat tb = sb.matrixT(), qb = sb.matrixU();
  CMat c2 = qa.adjoint() * c.cast<std::complex<double>>() * qb;

  const double sep_tol = 1e-13 * (inf_norm(a) + inf_norm(b) + 1.0);
  CMat y(m, n);
  // Both T_a and T_b are upper triangular; solve column by column, each via
  // back-substitution in the shifted triangular matrix T_a + t_b(j,j) I.
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = -c2.col(j);
    for (Eigen::Index k = 0; k < j; ++k) rhs -= tb(k, j) * y.col(k);
    for (Eigen::Index i = m - 1; i >= 0; --i) {
      std::complex<double> acc = rhs(i);
      for (Eigen::Index k = i + 1; k < m; ++k) acc -= ta(i, k) * y(k, j);
      const std::complex<double> d = ta(i, i) + tb(j, j);
      if (std::abs(d) < sep_tol)
        throw SingularPencil("solve_sylvester: spectra of A and -B intersect");
      y(i, j) = acc / d;
    }
  }
  CMat x = qa * y * qb.adjoint();
  return x.real().cast<double>();
}

}  // namespace

Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c, const SolverOptions& opts) {
  const Eigen::Index m = a.rows(), n = b.rows();
  if (a.cols() != m || b.cols() != n || c.rows() != m || c.cols() != n)
    throw InvalidBlocks("solve_sylvester: dimension mismatch");
  if (m == 0 || n == 0) return Mat(m, n);

  Mat x = (std::max(m, n) <= opts.sylvester_small_max) ? sylvester_kron(a, b, c)
                                                       : sylvester_schur(a, b, c);

  const double resid = inf_norm(a * x + x * b + c);
  const double bound =
      opts.sylvester_rel_tol * (inf_norm(a) + inf_norm(b)) * std::max(inf_norm(x), 1.0) + 1e-12;
  if (resid > bound)
    throw SingularPencil("solve_sylvester: residual too large, pencil nearly singular");
  return x;
}

namespace {

double nare_residual(const Mat& tpp, const Mat& tpm, const Mat& tmp, const Mat& tmm,
                     const Mat& x) {
  return inf_norm(tpp * x + x * tmp * x + x * tmm + tpm);
}

// One Newton step for the Riccati residual, linearized around x; each step
// costs one Sylvester solve.
Mat nare_newton_step(const Mat& tpp, const Mat& tpm, const Mat& tmp, const Mat& tmm,
                     const Mat& x, const SolverOptions& opts) {
  const Mat f = tpp * x + x * tmp * x + x * tmm + tpm;
  const Mat an = tpp + x * tmp;
  const Mat bn = tmm + tmp * x;
  return x + solve_sylvester(an, bn, f, opts);
}

}  // namespace

Mat solve_nare(const Mat& tpp, const Mat& tpm, const Mat& tmp, const Mat& tmm,
               const SolverOptions& opts) {
  const Eigen::Index m = tpp.rows(), n = tmm.rows();
  if (tpp.cols() != m || tmm.cols() != n || tpm.rows() != m || tpm.cols() != n ||
      tmp.rows() != n || tmp.cols() != m)
    throw InvalidBlocks("solve_nare: block dimensions do not assemble");
  if (m == 0 || n == 0) return Mat(m, n);

  Mat t(m + n, m + n);
  t.topLeftCorner(m, m) = tpp;
  t.topRightCorner(m, n) = tpm;
  t.bottomLeftCorner(n, m) = tmp;
  t.bottomRightCorner(n, n) = tmm;
  if (!check_generator(t, opts.generator_tol).is_subgenerator)
    throw InvalidBlocks("solve_nare: assembled blocks are not a (sub)generator");

  // Structure-preserving doubling on the M-matrix form
  //   X C X - A X - X D + B = 0 with A = -Tpp, D = -Tmm, B = Tpm, C = Tmp.
  const Mat a = -tpp, d = -tmm;
  const Mat& b = tpm;
  const Mat& c = tmp;
  double gamma = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) gamma = std::max(gamma, a(i, i));
  for (Eigen::Index i = 0; i < n; ++i) gamma = std::max(gamma, d(i, i));
  if (gamma <= 0.0) {
    if (inf_norm(b) == 0.0) return Mat::Zero(m, n);
    throw InvalidBlocks("solve_nare: zero diagonal with nonzero coupling");
  }

  const Mat id_m = Mat::Identity(m, m), id_n = Mat::Identity(n, n);
  const Mat a_g = a + gamma * id_m;
  const Mat d_g = d + gamma * id_n;
  Eigen::PartialPivLU<Mat> lu_ag(a_g), lu_dg(d_g);
  const Mat w = a_g - b * lu_dg.solve(c);
  const Mat v = d_g - c * lu_ag.solve(b);
  Eigen::PartialPivLU<Mat> lu_w(w), lu_v(v);

  Mat e = id_m - 2.0 * gamma * lu_w.solve(id_m);
  Mat f = id_n - 2.0 * gamma * lu_v.solve(id_n);
  Mat g = 2.0 * gamma * lu_w.solve(b * lu_dg.solve(id_n));
  Mat h = 2.0 * gamma * lu_v.solve(c * lu_ag.solve(id_m));

  bool converged = false;
  for (int it = 0; it < opts.nare_max_iter; ++it) {
    Eigen::PartialPivLU<Mat> lu1(id_m - g * h);
    Eigen::PartialPivLU<Mat> lu2(id_n - h * g);
    const Mat g_next = g + e * lu1.solve(g * f);
    const Mat h_next = h + f * lu2.solve(h * e);
    const Mat e_next = e * lu1.solve(e);
    const Mat f_next = f * lu2.solve(f);
    const double step = inf_norm(g_next - g);
    g = g_next;
    h = h_next;
    e = e_next;
    f = f_next;
    if (!g.allFinite()) throw NoConvergence("solve_nare: iteration diverged");
    if (step <= opts.nare_step_tol) {
      converged = true;
      break;
    }
  }

  // Polish with Newton; near-critical drifts leave the doubling iteration a
  // few digits short of the residual target.
  for (int it = 0; it < 5 && nare_residual(tpp, tpm, tmp, tmm, g) > 0.5 * opts.nare_residual_tol;
       ++it) {
    try {
      g = nare_newton_step(tpp, tpm, tmp, tmm, g, opts);
      converged = true;
    } catch (const SingularPencil&) {
      break;  // critical case: keep the doubling iterate
    }
  }

  if (g.minCoeff() < -1e-9) throw NoConvergence("solve_nare: negative entries in solution");
  g = g.cwiseMax(0.0);
  const double resid = nare_residual(tpp, tpm, tmp, tmm, g);
  if (!converged || resid > opts.nare_residual_tol) {
    std::ostringstream msg;
    msg << "solve_nare: no convergence (residual " << resid << ")";
    throw NoConvergence(msg.str());
  }
  if ((g * ones(n)).maxCoeff() > 1.0 + 1e-10)
    throw NoConvergence("solve_nare: solution row sums exceed 1");
  return g;
}

}  // namespace fluidq
