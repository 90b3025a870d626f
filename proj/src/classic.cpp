#include "fluidq/classic.hpp"

#include <sstream>

namespace fluidq {

void ClassicModel::validate(const SolverOptions& opts) const {
  const Eigen::Index m = n_plus(), n = n_minus();
  if (Tpp.cols() != m || Tmm.cols() != n || Tpm.rows() != m || Tpm.cols() != n ||
      Tmp.rows() != n || Tmp.cols() != m)
    throw InvalidBlocks("classic: interior block dimensions do not assemble");
  if (T0mm.rows() != n || T0mm.cols() != n || T0mp.rows() != n || T0mp.cols() != m)
    throw InvalidBlocks("classic: boundary block dimensions do not match S_-");

  Mat t(m + n, m + n);
  t.topLeftCorner(m, m) = Tpp;
  t.topRightCorner(m, n) = Tpm;
  t.bottomLeftCorner(n, m) = Tmp;
  t.bottomRightCorner(n, n) = Tmm;
  if (!check_generator(t, opts.generator_tol).is_generator)
    throw InvalidBlocks("classic: assembled interior matrix is not a generator");

  Mat boundary(n, n + m);
  boundary.leftCols(n) = T0mm;
  boundary.rightCols(m) = T0mp;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = boundary.row(i).sum();
    if (std::abs(sum) > opts.generator_tol)
      throw InvalidBlocks("classic: boundary row sums are not zero");
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (j != i && boundary(i, j) < -opts.generator_tol)
        throw InvalidBlocks("classic: negative boundary rate");
  }
}

ClassicSolution solve_classic(const ClassicModel& model, const SolverOptions& opts) {
  model.validate(opts);
  const Eigen::Index m = model.n_plus(), n = model.n_minus();

  Mat t(m + n, m + n);
  t.topLeftCorner(m, m) = model.Tpp;
  t.topRightCorner(m, n) = model.Tpm;
  t.bottomLeftCorner(n, m) = model.Tmp;
  t.bottomRightCorner(n, n) = model.Tmm;
  const RowVec xi = stationary_vector(t, opts);
  const double drift_up = xi.head(m).sum();
  const double drift_down = xi.tail(n).sum();
  if (!(drift_down > drift_up)) {
    std::ostringstream msg;
    msg << "solve_classic: queue is unstable (up drift " << drift_up << " >= down drift "
        << drift_down << ")";
    throw Unstable(msg.str());
  }

  ClassicSolution sol;
  sol.stable = true;
  sol.Psi = solve_nare(model.Tpp, model.Tpm, model.Tmp, model.Tmm, opts);
  sol.K = model.Tpp + sol.Psi * model.Tmp;

  const Mat boundary_gen = model.T0mm + model.T0mp * sol.Psi;
  RowVec p = stationary_vector(boundary_gen, opts);

  // Normalize so that the boundary mass plus twice the integrated up-state
  // density sums to one: p (e + 2 T0mp (-K)^{-1} e) = 1.
  Vec y = (-sol.K).lu().solve(ones(m));
  const double scale = p.sum() + 2.0 * (p * model.T0mp * y).value();
  sol.p_minus = p / scale;
  sol.boundary_flow = sol.p_minus * model.T0mp;
  return sol;
}

std::pair<RowVec, RowVec> classic_density(const ClassicSolution& sol, double x,
                                          const SolverOptions& opts) {
  if (!sol.stable) throw Unstable("classic_density: solution is not stable");
  if (!(x > 0.0)) throw InvalidPoint("classic_density: x must be positive");
  RowVec up = sol.boundary_flow * expm(sol.K, x, opts);
  RowVec down = up * sol.Psi;
  return {up, down};
}

double classic_level_cdf(const ClassicSolution& sol, double x, const SolverOptions& opts) {
  if (!sol.stable) throw Unstable("classic_level_cdf: solution is not stable");
  if (!(x >= 0.0)) throw InvalidPoint("classic_level_cdf: x must be nonnegative");
  const Eigen::Index m = sol.K.rows();
  if (m == 0) return 1.0;
  Eigen::PartialPivLU<Mat> lu(Mat(-sol.K));
  Vec tail = lu.solve((Mat::Identity(m, m) - expm(sol.K, x, opts)) * ones(m));
  return sol.p_minus.sum() + 2.0 * (sol.boundary_flow * tail).value();
}

}  // namespace fluidq
