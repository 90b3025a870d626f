#include "fluidq/jumps.hpp"

#include <sstream>

namespace fluidq {

double PHDist::mean() const {
  if (order() == 0) return 0.0;
  return (alpha * (-U).lu().solve(ones(order()))).value();
}

void PHDist::validate(double tol) const {
  const Eigen::Index m = order();
  if (U.cols() != m || alpha.size() != m)
    throw InvalidBlocks("ph: alpha and U dimensions disagree");
  if (m == 0) throw InvalidBlocks("ph: empty distribution");
  if (alpha.minCoeff() < -tol) throw InvalidBlocks("ph: negative initial probability");
  if (std::abs(alpha.sum() - 1.0) > 1e-12)
    throw InvalidBlocks("ph: initial vector must sum to one");
  const Vec exits = exit_rates();
  if (exits.minCoeff() < -tol) throw InvalidBlocks("ph: U row sums must be nonpositive");
  if (exits.maxCoeff() <= tol) throw InvalidBlocks("ph: no absorption from any phase");
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j && U(i, j) < -tol) throw InvalidBlocks("ph: negative off-diagonal rate");
  Eigen::FullPivLU<Mat> lu(U);
  if (!lu.isInvertible())
    throw InvalidBlocks("ph: U is singular, absorption is not almost sure");
}

void JumpModel::validate(const SolverOptions& opts) const {
  const double tol = opts.generator_tol;
  if (C < 1) throw InvalidBlocks("jump model: at least one color required");
  if (static_cast<int>(Tmm.size()) != C + 1)
    throw InvalidBlocks("jump model: need one Tmm per color plus the boundary");
  if (static_cast<int>(ph.size()) != C + 1)
    throw InvalidBlocks("jump model: ph must have slots 1..C");
  for (int c = 0; c <= C; ++c)
    if (Tmm[c].rows() != n_minus || Tmm[c].cols() != n_minus)
      throw InvalidBlocks("jump model: Tmm dimension mismatch");
  for (int c = 1; c <= C; ++c)
    for (const auto& d : ph[c]) d.validate(tol);

  std::vector<Vec> jump_out(C + 1, Vec::Zero(n_minus));
  for (const auto& r : rules) {
    if (r.to < 1 || r.to > C || r.from < 0 || r.from > C ||
        (r.from != 0 && r.from > r.to) || (r.from == 0 && r.to < 1))
      throw InvalidBlocks("jump model: rule colors out of range");
    if (r.from == r.to && r.from == 0)
      throw InvalidBlocks("jump model: boundary rules must add fluid");
    if (r.type < 1 || r.type > types(r.to))
      throw InvalidBlocks("jump model: rule type has no size distribution");
    if (r.rate.rows() != n_minus || r.rate.cols() != n_minus)
      throw InvalidBlocks("jump model: rule rate dimension mismatch");
    if (r.rate.size() && r.rate.minCoeff() < -tol)
      throw InvalidBlocks("jump model: negative jump rate");
    jump_out[r.from] += r.rate * ones(n_minus);
  }

  for (int c = 0; c <= C; ++c) {
    for (Eigen::Index i = 0; i < n_minus; ++i) {
      for (Eigen::Index j = 0; j < n_minus; ++j)
        if (i != j && Tmm[c](i, j) < -tol)
          throw InvalidBlocks("jump model: negative background rate");
      const double sum = Tmm[c].row(i).sum() + jump_out[c](i);
      if (std::abs(sum) > tol) {
        std::ostringstream msg;
        msg << "jump model: row " << i << " of color " << c
            << " does not conserve rate (sum " << sum << ")";
        throw InvalidBlocks(msg.str());
      }
    }
  }
}

Eigen::Index ColorStateMap::index(Eigen::Index background, int type, Eigen::Index phase) const {
  return background * phases + offset[type] + phase;
}

ColorStateMap::Triple ColorStateMap::triple(Eigen::Index idx) const {
  Triple t;
  t.background = idx / phases;
  Eigen::Index rem = idx % phases;
  int type = 1;
  while (type + 1 < static_cast<int>(offset.size()) && offset[type + 1] <= rem) ++type;
  t.type = type;
  t.phase = rem - offset[type];
  return t;
}

std::pair<ColoredModel, StateMap> expand_jumps(const JumpModel& jm) {
  jm.validate();
  const int C = jm.C;
  const Eigen::Index n = jm.n_minus;

  StateMap smap;
  smap.color.resize(C + 1);
  for (int c = 1; c <= C; ++c) {
    auto& m = smap.color[c];
    m.n_minus = n;
    const int L = jm.types(c);
    m.order.assign(L + 1, 0);
    m.offset.assign(L + 1, 0);
    for (int l = 1; l <= L; ++l) {
      m.order[l] = jm.ph[c][l - 1].order();
      m.offset[l] = m.phases;
      m.phases += m.order[l];
    }
  }

  ColoredModel cm;
  cm.C = C;
  cm.n_minus = n;
  cm.n_plus.assign(C + 1, 0);
  cm.Tmm.resize(C + 1);
  cm.Tmp.resize(C + 1);
  cm.Tpp.resize(C + 1);
  cm.Tpm.resize(C + 1);
  cm.T0mp.resize(C + 1);
  cm.Tmp2.resize(C);
  cm.Tpp2.resize(C);
  cm.T0mm = jm.Tmm[0];

  for (int c = 1; c <= C; ++c) {
    const auto& m = smap.color[c];
    cm.n_plus[c] = m.size();
    cm.Tmm[c] = jm.Tmm[c];
    cm.Tmp[c] = Mat::Zero(n, m.size());
    cm.T0mp[c] = Mat::Zero(n, m.size());
    // While fluid is added, the background component is frozen and the phase
    // evolves by the size distribution; absorption ends the rise.
    cm.Tpp[c] = Mat::Zero(m.size(), m.size());
    cm.Tpm[c] = Mat::Zero(m.size(), n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (int l = 1; l <= jm.types(c); ++l) {
        const PHDist& d = jm.ph[c][l - 1];
        const Vec exits = d.exit_rates();
        for (Eigen::Index p = 0; p < d.order(); ++p) {
          const Eigen::Index row = m.index(a, l, p);
          for (Eigen::Index q = 0; q < d.order(); ++q)
            cm.Tpp[c](row, m.index(a, l, q)) = d.U(p, q);
          cm.Tpm[c](row, a) = exits(p);
        }
      }
  }

  for (const auto& r : jm.rules) {
    const auto& m = smap.color[r.to];
    const PHDist& d = jm.ph[r.to][r.type - 1];
    Mat block = Mat::Zero(n, m.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < n; ++a) {
        const double rate = r.rate(i, a);
        if (rate == 0.0) continue;
        for (Eigen::Index p = 0; p < d.order(); ++p)
          block(i, m.index(a, r.type, p)) += rate * d.alpha(p);
      }
    if (r.from == 0) {
      cm.T0mp[r.to] += block;
    } else if (r.from == r.to) {
      cm.Tmp[r.from] += block;
    } else {
      if (const Mat* existing = cm.Tmp2.get(r.from, r.to))
        cm.Tmp2.set(r.from, r.to, *existing + block);
      else
        cm.Tmp2.set(r.from, r.to, std::move(block));
    }
  }
  return {std::move(cm), std::move(smap)};
}

JumpSolution solve_jumps(const JumpModel& jm, const SolverOptions& opts) {
  auto [cm, smap] = expand_jumps(jm);
  JumpSolution js;
  js.colored = solve_colored(cm, opts);
  js.smap = std::move(smap);
  if (!js.colored.recurrent) return js;

  // The colored solution is normalized with the rise intervals counted; the
  // censored queue keeps the same direction vector and renormalizes without
  // the factor two.
  double scale = js.colored.p_minus.sum();
  for (int c = 1; c <= js.colored.C; ++c)
    scale += (js.colored.q0[c] * js.colored.y_inf[c]).value();
  js.p_minus = js.colored.p_minus / scale;
  js.q0.resize(js.colored.C + 1);
  for (int c = 1; c <= js.colored.C; ++c) js.q0[c] = js.colored.q0[c] / scale;
  return js;
}

RowVec jump_density(const JumpSolution& js, const std::vector<double>& xs,
                    const SolverOptions& opts) {
  if (!js.recurrent()) throw NotRecurrent("jump_density: model is not positive recurrent");
  const ColoredSolution& sol = js.colored;
  if (static_cast<int>(xs.size()) != sol.C)
    throw InvalidPoint("jump_density: xs must have one amount per color");
  std::vector<int> positive;
  for (int c = 1; c <= sol.C; ++c) {
    if (xs[c - 1] < 0.0 || !std::isfinite(xs[c - 1]))
      throw InvalidPoint("jump_density: negative or non-finite amount");
    if (xs[c - 1] > 0.0) positive.push_back(c);
  }
  if (positive.empty()) throw InvalidPoint("jump_density: all amounts are zero");

  RowVec v = js.q0[positive.front()];
  for (size_t i = 0; i < positive.size(); ++i) {
    const int c = positive[i];
    if (v.size() == 0 || sol.n_plus[c] == 0) return RowVec::Zero(sol.n_minus);
    v = v * expm(sol.Kc[c], xs[c - 1], opts);
    if (i + 1 < positive.size()) {
      const Mat* blk = sol.Kup.get(c, positive[i + 1]);
      if (!blk) return RowVec::Zero(sol.n_minus);
      v = v * *blk;
    }
  }
  return v * sol.Psi[positive.back()];
}

double jump_level_cdf(const JumpSolution& js, double x, const SolverOptions& opts) {
  return detail::level_cdf_core(js.colored, js.p_minus, js.q0, 1.0, x, opts);
}

std::vector<double> jump_top_color_dist(const JumpSolution& js, const SolverOptions& opts) {
  const bool rec = detail::recursion_applicable(js.colored, js.q0);
  return detail::top_color_core(js.colored, js.p_minus, js.q0, 1.0, rec, opts);
}

Mat joint_marginal(const JumpSolution& js, const SolverOptions&) {
  if (!js.recurrent()) throw NotRecurrent("joint_marginal: model is not positive recurrent");
  const ColoredSolution& sol = js.colored;
  const int C = sol.C;
  Mat m = Mat::Zero(C + 1, sol.n_minus);
  m.row(0) = js.p_minus;

  // Left solve r (-Kbig) = q0 blockwise, forward over colors; incoming blocks
  // are indexed once so the cost is linear in the number of stored blocks.
  std::vector<std::vector<std::pair<int, const Mat*>>> incoming(C + 1);
  for (int c = 1; c <= C; ++c)
    for (const auto& [cp, blk] : sol.Kup.row(c)) incoming[cp].push_back({c, &blk});

  std::vector<RowVec> r(C + 1);
  for (int c = 1; c <= C; ++c) {
    RowVec w = js.q0[c];
    for (const auto& [src, blk] : incoming[c]) w += r[src] * *blk;
    if (sol.n_plus[c] == 0) {
      r[c] = RowVec::Zero(0);
      continue;
    }
    Mat neg_k = -sol.Kc[c];
    r[c] = neg_k.transpose().lu().solve(w.transpose()).transpose();
    m.row(c) = r[c] * sol.Psi[c];
  }
  return m;
}

}  // namespace fluidq
