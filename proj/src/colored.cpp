#include "fluidq/colored.hpp"

#include <algorithm>
#include <sstream>

namespace fluidq {

using detail::inf_norm;

void ColorBlockTable::set(int c, int cp, Mat m) {
  if (c < 1 || cp <= c || cp >= static_cast<int>(rows_.size()))
    throw InvalidBlocks("color block table: indices must satisfy 1 <= c < c' <= C");
  auto& row = rows_[c];
  auto it = std::lower_bound(row.begin(), row.end(), cp,
                             [](const auto& e, int key) { return e.first < key; });
  if (it != row.end() && it->first == cp)
    it->second = std::move(m);
  else
    row.insert(it, {cp, std::move(m)});
}

const Mat* ColorBlockTable::get(int c, int cp) const {
  if (c < 1 || c >= static_cast<int>(rows_.size())) return nullptr;
  const auto& row = rows_[c];
  auto it = std::lower_bound(row.begin(), row.end(), cp,
                             [](const auto& e, int key) { return e.first < key; });
  if (it != row.end() && it->first == cp) return &it->second;
  return nullptr;
}

const std::vector<std::pair<int, Mat>>& ColorBlockTable::row(int c) const {
  static const std::vector<std::pair<int, Mat>> empty;
  if (c < 1 || c >= static_cast<int>(rows_.size())) return empty;
  return rows_[c];
}

namespace {

std::string block_name(const char* base, int c) {
  std::ostringstream s;
  s << base << "[" << c << "]";
  return s.str();
}

std::string block_name2(const char* base, int c, int cp) {
  std::ostringstream s;
  s << base << "[" << c << "][" << cp << "]";
  return s.str();
}

void check_dims(std::vector<Diagnostic>& out, const std::string& name, const Mat& m,
                Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    out.push_back({name, -1, msg.str(), 0.0});
  }
}

void check_nonneg(std::vector<Diagnostic>& out, const std::string& name, const Mat& m,
                  double tol, bool skip_diagonal) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (skip_diagonal && i == j) continue;
      if (m(i, j) < -tol) out.push_back({name, i, "negative rate", m(i, j)});
    }
}

}  // namespace

std::vector<Diagnostic> validate(const ColoredModel& model, const SolverOptions& opts) {
  std::vector<Diagnostic> out;
  const double tol = opts.generator_tol;
  const int C = model.C;
  if (C < 1) {
    out.push_back({"C", -1, "at least one color required", static_cast<double>(C)});
    return out;
  }
  auto sized = [C](const auto& v) { return static_cast<int>(v.size()) == C + 1; };
  if (!sized(model.n_plus) || !sized(model.Tmm) || !sized(model.Tmp) || !sized(model.Tpp) ||
      !sized(model.Tpm) || !sized(model.T0mp)) {
    out.push_back({"model", -1, "per-color vectors must have C+1 slots (index 0 unused)", 0.0});
    return out;
  }

  const Eigen::Index n = model.n_minus;
  for (int c = 1; c <= C; ++c) {
    const Eigen::Index m = model.n_plus[c];
    check_dims(out, block_name("Tmm", c), model.Tmm[c], n, n);
    check_dims(out, block_name("Tmp", c), model.Tmp[c], n, m);
    check_dims(out, block_name("Tpp", c), model.Tpp[c], m, m);
    check_dims(out, block_name("Tpm", c), model.Tpm[c], m, n);
    check_dims(out, block_name("T0mp", c), model.T0mp[c], n, m);
    for (const auto& [cp, blk] : model.Tmp2.row(c))
      check_dims(out, block_name2("Tmp2", c, cp), blk, n, model.n_plus[cp]);
    for (const auto& [cp, blk] : model.Tpp2.row(c))
      check_dims(out, block_name2("Tpp2", c, cp), blk, m, model.n_plus[cp]);
  }
  check_dims(out, "T0mm", model.T0mm, n, n);
  if (!out.empty()) return out;  // row checks below assume consistent dims

  for (int c = 1; c <= C; ++c) {
    check_nonneg(out, block_name("Tmm", c), model.Tmm[c], tol, true);
    check_nonneg(out, block_name("Tmp", c), model.Tmp[c], tol, false);
    check_nonneg(out, block_name("Tpp", c), model.Tpp[c], tol, true);
    check_nonneg(out, block_name("Tpm", c), model.Tpm[c], tol, false);
    check_nonneg(out, block_name("T0mp", c), model.T0mp[c], tol, false);
    for (const auto& [cp, blk] : model.Tmp2.row(c))
      check_nonneg(out, block_name2("Tmp2", c, cp), blk, tol, false);
    for (const auto& [cp, blk] : model.Tpp2.row(c))
      check_nonneg(out, block_name2("Tpp2", c, cp), blk, tol, false);

    // Total outflow from an up state of color c.
    for (Eigen::Index i = 0; i < model.n_plus[c]; ++i) {
      double sum = model.Tpp[c].row(i).sum() + model.Tpm[c].row(i).sum();
      for (const auto& [cp, blk] : model.Tpp2.row(c)) sum += blk.row(i).sum();
      if (std::abs(sum) > tol)
        out.push_back({block_name("Tpp", c), i, "up-state row sum is not zero", sum});
    }
    // Total outflow from a down state while the top color is c.
    for (Eigen::Index i = 0; i < n; ++i) {
      double sum = model.Tmm[c].row(i).sum() + model.Tmp[c].row(i).sum();
      for (const auto& [cp, blk] : model.Tmp2.row(c)) sum += blk.row(i).sum();
      if (std::abs(sum) > tol)
        out.push_back({block_name("Tmm", c), i, "down-state row sum is not zero", sum});
    }
  }

  check_nonneg(out, "T0mm", model.T0mm, tol, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = model.T0mm.row(i).sum();
    for (int c = 1; c <= C; ++c) sum += model.T0mp[c].row(i).sum();
    if (std::abs(sum) > tol)
      out.push_back({"T0mm", i, "boundary row sum is not zero", sum});
  }
  return out;
}

Eigen::Index ColoredSolution::total_plus() const {
  Eigen::Index total = 0;
  for (int c = 1; c <= C; ++c) total += n_plus[c];
  return total;
}

Mat ColoredSolution::kbig() const {
  const Eigen::Index total = total_plus();
  std::vector<Eigen::Index> offset(C + 2, 0);
  for (int c = 1; c <= C; ++c) offset[c + 1] = offset[c] + n_plus[c];
  Mat k = Mat::Zero(total, total);
  for (int c = 1; c <= C; ++c) {
    k.block(offset[c], offset[c], n_plus[c], n_plus[c]) = Kc[c];
    for (const auto& [cp, blk] : Kup.row(c))
      k.block(offset[c], offset[cp], n_plus[c], n_plus[cp]) = blk;
  }
  return k;
}

namespace {

// Quasi-stationary direction for a sub-generator whose deficit comes from
// sub-stochastic higher-color returns: power iteration on the uniformized
// matrix, renormalized each step. Coincides with the stationary vector when
// the row sums are zero.
RowVec perron_row_vector(const Mat& t) {
  const Eigen::Index n = t.rows();
  double theta = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) theta = std::max(theta, -t(i, i));
  Mat p = Mat::Identity(n, n) + t / (2.0 * theta);
  RowVec v = RowVec::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 20000; ++it) {
    RowVec w = v * p;
    const double total = w.sum();
    if (!(total > 0.0)) return v;
    w /= total;
    const double diff = (w - v).cwiseAbs().maxCoeff();
    v = w;
    if (diff < 1e-14) break;
  }
  return v;
}

struct EffectiveBlocks {
  Mat tpm;  // Tpm[c] + sum_{l>c} Tpp2[c][l] Psi[l]
  Mat tmm;  // Tmm[c] + sum_{l>c} Tmp2[c][l] Psi[l]
};

EffectiveBlocks effective_blocks(const ColoredModel& model, const std::vector<Mat>& psi, int c) {
  EffectiveBlocks eff{model.Tpm[c], model.Tmm[c]};
  for (const auto& [l, blk] : model.Tpp2.row(c)) eff.tpm += blk * psi[l];
  for (const auto& [l, blk] : model.Tmp2.row(c)) eff.tmm += blk * psi[l];
  return eff;
}

}  // namespace

ColoredSolution solve_colored(const ColoredModel& model, const SolverOptions& opts) {
  {
    auto diags = validate(model, opts);
    if (!diags.empty()) {
      std::ostringstream msg;
      msg << "solve_colored: model fails validation: " << diags.front().block;
      if (diags.front().row >= 0) msg << " row " << diags.front().row;
      msg << ": " << diags.front().message << " (" << diags.size() << " diagnostic(s) total)";
      throw InvalidBlocks(msg.str());
    }
  }

  const int C = model.C;
  ColoredSolution sol;
  sol.C = C;
  sol.n_minus = model.n_minus;
  sol.n_plus = model.n_plus;
  sol.Psi.resize(C + 1);
  sol.Kc.resize(C + 1);
  sol.Kup.resize(C);
  sol.drifts.assign(C + 1, {0.0, 0.0});
  sol.recurrent = true;

  for (int c = C; c >= 1; --c) {
    const Eigen::Index m = model.n_plus[c], n = model.n_minus;
    const EffectiveBlocks eff = effective_blocks(model, sol.Psi, c);

    // Recurrence test: drift of the color-c process with the higher colors
    // censored out.
    Mat tc(m + n, m + n);
    tc.topLeftCorner(m, m) = model.Tpp[c];
    tc.topRightCorner(m, n) = eff.tpm;
    tc.bottomLeftCorner(n, m) = model.Tmp[c];
    tc.bottomRightCorner(n, n) = eff.tmm;
    RowVec xi;
    if (check_generator(tc, opts.generator_tol).is_generator)
      xi = stationary_vector(tc, opts);
    else
      xi = perron_row_vector(tc);
    sol.drifts[c] = {xi.head(m).sum(), xi.tail(n).sum()};
    if (!(sol.drifts[c].first < sol.drifts[c].second)) sol.recurrent = false;

    const bool zero_tmp = model.Tmp[c].size() == 0 || model.Tmp[c].isZero(0.0);
    if (zero_tmp && opts.use_sylvester_fast_path)
      sol.Psi[c] = solve_sylvester(model.Tpp[c], eff.tmm, eff.tpm, opts);
    else
      sol.Psi[c] = solve_nare(model.Tpp[c], eff.tpm, model.Tmp[c], eff.tmm, opts);
    sol.Kc[c] = model.Tpp[c] + sol.Psi[c] * model.Tmp[c];

    for (const auto& [cp, blk] : model.Tpp2.row(c)) sol.Kup.set(c, cp, blk);
    for (const auto& [cp, blk] : model.Tmp2.row(c)) {
      Mat add = sol.Psi[c] * blk;
      if (const Mat* existing = sol.Kup.get(c, cp))
        sol.Kup.set(c, cp, *existing + add);
      else
        sol.Kup.set(c, cp, std::move(add));
    }
  }

  if (!sol.recurrent) return sol;

  Mat boundary_gen = model.T0mm;
  for (int c = 1; c <= C; ++c) boundary_gen += model.T0mp[c] * sol.Psi[c];
  RowVec p = stationary_vector(boundary_gen, opts);

  std::vector<Vec> rhs(C + 1);
  for (int c = 1; c <= C; ++c) rhs[c] = ones(model.n_plus[c]);
  sol.y_inf = detail::solve_neg_kbig(sol, rhs);

  Vec z = Vec::Zero(model.n_minus);
  for (int c = 1; c <= C; ++c) z += model.T0mp[c] * sol.y_inf[c];
  const double scale = p.sum() + 2.0 * (p * z).value();
  sol.p_minus = p / scale;
  sol.q0.resize(C + 1);
  for (int c = 1; c <= C; ++c) sol.q0[c] = sol.p_minus * model.T0mp[c];
  return sol;
}

namespace detail {

std::vector<Vec> solve_neg_kbig(const ColoredSolution& sol, const std::vector<Vec>& rhs) {
  std::vector<Vec> w(sol.C + 1);
  for (int c = sol.C; c >= 1; --c) {
    if (sol.n_plus[c] == 0) {
      w[c] = Vec(0);
      continue;
    }
    Vec b = rhs[c];
    for (const auto& [cp, blk] : sol.Kup.row(c)) b += blk * w[cp];
    w[c] = (-sol.Kc[c]).lu().solve(b);
  }
  return w;
}

double level_cdf_core(const ColoredSolution& sol, const RowVec& p_minus,
                      const std::vector<RowVec>& q0, double factor, double x,
                      const SolverOptions& opts) {
  if (!sol.recurrent) throw NotRecurrent("level_cdf: model is not positive recurrent");
  if (!(x >= 0.0)) throw InvalidPoint("level_cdf: x must be nonnegative");
  double acc = p_minus.sum();
  if (sol.total_plus() == 0) return acc;

  const Mat k = sol.kbig();
  const Mat ekx = expm(k, x, opts);
  Vec u = ekx * ones(k.rows());
  // Split u into per-color blocks and apply (-Kbig)^{-1} blockwise.
  std::vector<Vec> ub(sol.C + 1);
  Eigen::Index off = 0;
  for (int c = 1; c <= sol.C; ++c) {
    ub[c] = u.segment(off, sol.n_plus[c]);
    off += sol.n_plus[c];
  }
  std::vector<Vec> w = solve_neg_kbig(sol, ub);
  for (int c = 1; c <= sol.C; ++c)
    acc += factor * (q0[c] * (sol.y_inf[c] - w[c])).value();
  return acc;
}

bool recursion_applicable(const ColoredSolution& sol, const std::vector<RowVec>& q0) {
  if (q0.size() != static_cast<size_t>(sol.C) + 1) return false;
  for (int c = 1; c <= sol.C; ++c)
    for (const auto& [cp, blk] : sol.Kup.row(c))
      if (cp != c + 1) return false;
  for (int c = 2; c <= sol.C; ++c)
    if (q0[c].size() && q0[c].cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

std::vector<double> top_color_core(const ColoredSolution& sol, const RowVec& p_minus,
                                   const std::vector<RowVec>& q0, double factor, bool recursive,
                                   const SolverOptions& opts) {
  if (!sol.recurrent) throw NotRecurrent("top_color_dist: model is not positive recurrent");
  std::vector<double> dist(sol.C + 1, 0.0);
  dist[0] = p_minus.sum();

  if (recursive) {
    // v_{c+1} = v_c (Tpp2 + Psi_c Tmp2)(-K_{c+1})^{-1}, seeded from the
    // boundary flow into color 1; linear in the number of colors.
    RowVec v;
    for (int c = 1; c <= sol.C; ++c) {
      if (c == 1) {
        v = factor * q0[1];
      } else {
        const Mat* blk = sol.Kup.get(c - 1, c);
        RowVec fed = blk ? RowVec(v * *blk) : RowVec(RowVec::Zero(sol.n_plus[c]));
        v = fed;
      }
      if (sol.n_plus[c] == 0) {
        v = RowVec::Zero(0);
        continue;
      }
      // v <- v (-Kc)^{-1}, i.e. solve v (-Kc) = v_in.
      Mat neg_k = -sol.Kc[c];
      v = neg_k.transpose().lu().solve(v.transpose()).transpose();
      dist[c] = v.sum();
    }
    return dist;
  }

  const Eigen::Index total = sol.total_plus();
  if (total == 0) return dist;
  RowVec w(total);
  Eigen::Index off = 0;
  std::vector<Eigen::Index> offset(sol.C + 1, 0);
  for (int c = 1; c <= sol.C; ++c) {
    offset[c] = off;
    w.segment(off, sol.n_plus[c]) = q0[c];
    off += sol.n_plus[c];
  }
  Mat neg_k = -sol.kbig();
  RowVec r = neg_k.transpose().lu().solve(w.transpose()).transpose();
  for (int c = 1; c <= sol.C; ++c)
    dist[c] = factor * r.segment(offset[c], sol.n_plus[c]).sum();
  return dist;
}

}  // namespace detail

double level_cdf(const ColoredSolution& sol, double x, const SolverOptions& opts) {
  return detail::level_cdf_core(sol, sol.p_minus, sol.q0, 2.0, x, opts);
}

std::vector<double> top_color_dist(const ColoredSolution& sol, const SolverOptions& opts) {
  const bool rec = detail::recursion_applicable(sol, sol.q0);
  return detail::top_color_core(sol, sol.p_minus, sol.q0, 2.0, rec, opts);
}

std::vector<double> top_color_dist_general(const ColoredSolution& sol, const SolverOptions& opts) {
  return detail::top_color_core(sol, sol.p_minus, sol.q0, 2.0, false, opts);
}

std::vector<double> top_color_dist_recursive(const ColoredSolution& sol,
                                             const SolverOptions& opts) {
  if (!detail::recursion_applicable(sol, sol.q0))
    throw InvalidBlocks("top_color_dist_recursive: colors can be skipped or the boundary feeds a color above 1");
  return detail::top_color_core(sol, sol.p_minus, sol.q0, 2.0, true, opts);
}

std::pair<RowVec, RowVec> density(const ColoredSolution& sol, const ColoredModel& model,
                                  const std::vector<double>& xs, const SolverOptions& opts) {
  if (!sol.recurrent) throw NotRecurrent("density: model is not positive recurrent");
  if (static_cast<int>(xs.size()) != sol.C)
    throw InvalidPoint("density: xs must have one amount per color");
  std::vector<int> positive;
  for (int c = 1; c <= sol.C; ++c) {
    const double v = xs[c - 1];
    if (v < 0.0 || !std::isfinite(v)) throw InvalidPoint("density: negative or non-finite amount");
    if (v > 0.0) positive.push_back(c);
  }
  if (positive.empty())
    throw InvalidPoint("density: all amounts are zero (the boundary mass is p_minus)");

  const int cn = positive.back();
  auto zeros = [&] {
    return std::make_pair(RowVec(RowVec::Zero(sol.n_plus[cn])), RowVec(RowVec::Zero(sol.n_minus)));
  };

  RowVec v = sol.q0[positive.front()];
  for (size_t i = 0; i < positive.size(); ++i) {
    const int c = positive[i];
    if (v.size() == 0 || sol.n_plus[c] == 0) return zeros();
    v = v * expm(sol.Kc[c], xs[c - 1], opts);
    if (i + 1 < positive.size()) {
      const Mat* blk = sol.Kup.get(c, positive[i + 1]);
      if (!blk) return zeros();  // that color sequence is unreachable
      v = v * *blk;
    }
  }
  return {v, RowVec(v * sol.Psi[cn])};
}

ClassicModel reduce_to_classic(const ColoredModel& model) {
  const int C = model.C;
  const double tol = 1e-12;
  auto same = [&](const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() == 0) return true;
    return (a - b).cwiseAbs().maxCoeff() <= tol * (1.0 + a.cwiseAbs().maxCoeff());
  };

  for (int c = 1; c <= C; ++c) {
    if (!same(model.Tmm[c], model.Tmm[1]))
      throw HypothesisViolated("reduce_to_classic: Tmm depends on the color");
    if (c < C && model.Tmp[c].size() && !model.Tmp[c].isZero(tol))
      throw HypothesisViolated("reduce_to_classic: Tmp is nonzero below the last color");
    for (const auto& [cp, blk] : model.Tmp2.row(c)) {
      if (cp < C && !blk.isZero(tol))
        throw HypothesisViolated("reduce_to_classic: Tmp2 targets a color below the last");
      if (cp == C && !same(blk, model.Tmp[C]))
        throw HypothesisViolated("reduce_to_classic: Tmp2 into the last color depends on the source color");
    }
    if (c < C && !model.Tmp2.get(c, C) && model.Tmp[C].size() && !model.Tmp[C].isZero(tol))
      throw HypothesisViolated("reduce_to_classic: Tmp2 into the last color depends on the source color");
  }

  std::vector<Eigen::Index> offset(C + 2, 0);
  for (int c = 1; c <= C; ++c) offset[c + 1] = offset[c] + model.n_plus[c];
  const Eigen::Index total = offset[C + 1];
  const Eigen::Index n = model.n_minus;

  ClassicModel out;
  out.Tpp = Mat::Zero(total, total);
  out.Tpm = Mat::Zero(total, n);
  out.Tmp = Mat::Zero(n, total);
  out.Tmm = model.Tmm[1];
  out.T0mm = model.T0mm;
  out.T0mp = Mat::Zero(n, total);
  for (int c = 1; c <= C; ++c) {
    out.Tpp.block(offset[c], offset[c], model.n_plus[c], model.n_plus[c]) = model.Tpp[c];
    for (const auto& [cp, blk] : model.Tpp2.row(c))
      out.Tpp.block(offset[c], offset[cp], model.n_plus[c], model.n_plus[cp]) = blk;
    out.Tpm.middleRows(offset[c], model.n_plus[c]) = model.Tpm[c];
    out.T0mp.middleCols(offset[c], model.n_plus[c]) = model.T0mp[c];
  }
  out.Tmp.rightCols(model.n_plus[C]) = model.Tmp[C];
  return out;
}

double PdeResiduals::max_interior() const {
  return std::max(std::max(down_interior, up_interior), std::max(down_axis, up_axis));
}

double PdeResiduals::max_boundary() const {
  return std::max(bc_color_switch, std::max(bc_origin_upper, bc_origin_lower));
}

PdeResiduals pde_residual(const ColoredSolution& sol, const ColoredModel& model, double x,
                          double y, double h, const SolverOptions& opts) {
  if (sol.C != 2 || model.C != 2)
    throw InvalidBlocks("pde_residual: only defined for two colors");
  if (!sol.recurrent) throw NotRecurrent("pde_residual: model is not positive recurrent");
  if (!(h > 0.0) || !(x > h) || !(y > h))
    throw InvalidPoint("pde_residual: need x, y > h > 0");

  const Mat* b12 = sol.Kup.get(1, 2);
  const Mat zero12 = Mat::Zero(sol.n_plus[1], sol.n_plus[2]);
  const Mat& bridge = b12 ? *b12 : zero12;

  // Analytic density pieces. "axis" means color 2 empty, "interior" both
  // colors present, "wall" color 1 empty.
  auto up_interior_at = [&](double a, double b) -> RowVec {
    if (a == 0.0) return sol.q0[2] * expm(sol.Kc[2], b, opts);
    return sol.q0[1] * expm(sol.Kc[1], a, opts) * bridge * expm(sol.Kc[2], b, opts);
  };
  auto down_interior_at = [&](double a, double b) -> RowVec {
    return up_interior_at(a, b) * sol.Psi[2];
  };
  auto up_axis_at = [&](double a) -> RowVec { return sol.q0[1] * expm(sol.Kc[1], a, opts); };
  auto down_axis_at = [&](double a) -> RowVec { return up_axis_at(a) * sol.Psi[1]; };

  PdeResiduals r;
  auto norm = [](const RowVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };

  {
    const RowVec fm = down_interior_at(x, y), fp = up_interior_at(x, y);
    const RowVec dym = (down_interior_at(x, y + h) - down_interior_at(x, y - h)) / (2.0 * h);
    const RowVec dyp = (up_interior_at(x, y + h) - up_interior_at(x, y - h)) / (2.0 * h);
    r.down_interior = norm(-dym - (fm * model.Tmm[2] + fp * model.Tpm[2]));
    r.up_interior = norm(dyp - (fm * model.Tmp[2] + fp * model.Tpp[2]));
  }
  {
    const RowVec fm = down_axis_at(x), fp = up_axis_at(x);
    const RowVec dxm = (down_axis_at(x + h) - down_axis_at(x - h)) / (2.0 * h);
    const RowVec dxp = (up_axis_at(x + h) - up_axis_at(x - h)) / (2.0 * h);
    // The color-2 layer collapsing onto the axis feeds the down states.
    const RowVec diag_term = up_interior_at(x, 0.0) * sol.Psi[2];
    r.down_axis = norm(-dxm - (fm * model.Tmm[1] + fp * model.Tpm[1] + diag_term));
    r.up_axis = norm(dxp - (fm * model.Tmp[1] + fp * model.Tpp[1]));
  }
  {
    const Mat* tmp2 = model.Tmp2.get(1, 2);
    const Mat* tpp2 = model.Tpp2.get(1, 2);
    RowVec rhs = RowVec::Zero(sol.n_plus[2]);
    if (tmp2) rhs += down_axis_at(x) * *tmp2;
    if (tpp2) rhs += up_axis_at(x) * *tpp2;
    r.bc_color_switch = norm(up_interior_at(x, 0.0) - rhs);
    r.bc_origin_upper = norm(RowVec(sol.q0[2] - sol.p_minus * model.T0mp[2]));
    r.bc_origin_lower = norm(RowVec(sol.q0[1] - sol.p_minus * model.T0mp[1]));
  }
  return r;
}

}  // namespace fluidq
