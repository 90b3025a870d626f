#include "fluidq/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fluidq {

using detail::kron;

void MMAP::validate(const SolverOptions& opts) const {
  const double tol = opts.generator_tol;
  const Eigen::Index m = order();
  if (m < 1) throw InvalidBlocks("mmap: empty phase space");
  if (D0.cols() != m) throw InvalidBlocks("mmap: D0 is not square");
  for (const auto& d : D)
    if (d.rows() != m || d.cols() != m) throw InvalidBlocks("mmap: arrival block dimension mismatch");
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j && D0(i, j) < -tol) throw InvalidBlocks("mmap: negative rate in D0");
  for (const auto& d : D)
    if (d.size() && d.minCoeff() < -tol) throw InvalidBlocks("mmap: negative arrival rate");
  if (!check_generator(total_generator(), tol).is_generator)
    throw InvalidBlocks("mmap: D0 + sum D is not a generator");
}

Mat MMAP::total_generator() const {
  Mat total = D0;
  for (const auto& d : D) total += d;
  return total;
}

std::vector<double> MMAP::arrival_rates(const SolverOptions& opts) const {
  const RowVec theta = stationary_vector(total_generator(), opts);
  std::vector<double> rates;
  rates.reserve(D.size());
  for (const auto& d : D) rates.push_back((theta * d).sum());
  return rates;
}

double mmap_load(const MMAP& arrivals, const std::vector<PHDist>& services,
                 const SolverOptions& opts) {
  if (services.size() != arrivals.D.size())
    throw InvalidBlocks("mmap_load: one service distribution per type required");
  const auto rates = arrivals.arrival_rates(opts);
  double load = 0.0;
  for (size_t l = 0; l < rates.size(); ++l) load += rates[l] * services[l].mean();
  return load;
}

MMAP scale_arrivals(const MMAP& arrivals, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale_arrivals: factor must be positive");
  MMAP out = arrivals;
  Mat removed = Mat::Zero(arrivals.order(), arrivals.order());
  for (size_t l = 0; l < out.D.size(); ++l) {
    removed += (1.0 - s) * out.D[l];
    out.D[l] *= s;
  }
  out.D0 = arrivals.D0 + removed;
  return out;
}

namespace {

bool is_finite_threshold(double v) { return std::isfinite(v); }

void validate_lcfs(const LCFSSpec& spec) {
  spec.arrivals.validate();
  const int L = spec.arrivals.type_count();
  if (L < 1) throw InvalidBlocks("lcfs: at least one job type required");
  if (static_cast<int>(spec.services.size()) != L ||
      static_cast<int>(spec.thresholds.size()) != L)
    throw InvalidBlocks("lcfs: one service distribution and threshold per type required");
  for (const auto& d : spec.services) d.validate();
  bool any_finite = false;
  for (double t : spec.thresholds) {
    if (is_finite_threshold(t)) {
      if (t < 1.0 || t != std::floor(t))
        throw InvalidThresholds("lcfs: thresholds must be positive integers or infinity");
      any_finite = true;
    }
  }
  if (!any_finite)
    throw InvalidThresholds("lcfs: all thresholds infinite; the queue has no finite capacity");
}

}  // namespace

JumpModel build_lcfs(const LCFSSpec& spec) {
  validate_lcfs(spec);
  const int L = spec.arrivals.type_count();

  // Canonical type order: nonincreasing thresholds.
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return spec.thresholds[a] > spec.thresholds[b];
  });

  std::vector<double> thr(L);
  std::vector<PHDist> svc(L);
  std::vector<Mat> arr(L);
  for (int l = 0; l < L; ++l) {
    thr[l] = spec.thresholds[order[l]];
    svc[l] = spec.services[order[l]];
    arr[l] = spec.arrivals.D[order[l]];
  }

  int C;
  if (is_finite_threshold(thr[0])) {
    C = static_cast<int>(thr[0]);
  } else {
    double max_finite = 0.0;
    for (double t : thr)
      if (is_finite_threshold(t)) max_finite = std::max(max_finite, t);
    C = 1 + static_cast<int>(max_finite);
  }

  JumpModel jm;
  jm.C = C;
  jm.n_minus = spec.arrivals.order();
  jm.Tmm.resize(C + 1);
  jm.ph.resize(C + 1);
  for (int c = 0; c <= C; ++c) {
    // Types at or below their threshold are rejected: their arrivals become
    // plain phase changes.
    Mat t = spec.arrivals.D0;
    for (int l = 0; l < L; ++l)
      if (is_finite_threshold(thr[l]) && thr[l] <= c) t += arr[l];
    jm.Tmm[c] = t;
  }
  for (int c = 1; c <= C; ++c) {
    // Admissible types joining as the c-th job: thresholds above c-1.
    for (int l = 0; l < L; ++l)
      if (thr[l] > c - 1) jm.ph[c].push_back(svc[l]);
  }
  for (int c = 0; c < C; ++c)
    for (int l = 0; l < L; ++l)
      if (thr[l] > c) jm.rules.push_back({c, c + 1, l + 1, arr[l]});
  // With an infinite top threshold the queue can keep accepting those types
  // at full occupancy; the jump keeps the top color.
  if (!is_finite_threshold(thr[0]))
    for (int l = 0; l < L; ++l)
      if (!is_finite_threshold(thr[l])) jm.rules.push_back({C, C, l + 1, arr[l]});
  return jm;
}

std::vector<double> lcfs_loss_probability(const JumpSolution& js, const LCFSSpec& spec,
                                          const SolverOptions& opts) {
  if (!js.recurrent())
    throw NotRecurrent("lcfs_loss_probability: model is not positive recurrent");
  const Mat m = joint_marginal(js, opts);
  const int C = js.colored.C;
  const int L = spec.arrivals.type_count();
  std::vector<double> loss(L, 0.0);
  for (int l = 0; l < L; ++l) {
    const Vec flow = spec.arrivals.D[l] * ones(spec.arrivals.order());
    double rejected = 0.0, offered = 0.0;
    for (int c = 0; c <= C; ++c) {
      const double rate = (m.row(c) * flow).value();
      offered += rate;
      if (is_finite_threshold(spec.thresholds[l]) && c >= spec.thresholds[l]) rejected += rate;
    }
    loss[l] = offered > 0.0 ? rejected / offered : 0.0;
  }
  return loss;
}

void CascadeSpec::validate(const SolverOptions& opts) const {
  arrivals.validate(opts);
  if (arrivals.type_count() != 1) throw InvalidBlocks("cascade: arrivals must be a plain MAP");
  if (levels < 1) throw InvalidBlocks("cascade: at least one level required");
  if (N < 1) throw InvalidBlocks("cascade: capacity must be at least one");
  // Extra trailing entries are allowed so level sweeps can reuse one spec.
  if (static_cast<int>(ph.size()) < levels)
    throw InvalidBlocks("cascade: one service distribution per level required");
  if (static_cast<int>(gamma.size()) < levels - 1)
    throw InvalidBlocks("cascade: need one spawn rate per level below the last");
  for (const auto& d : ph) d.validate();
  for (double g : gamma)
    if (!(g >= 0.0)) throw InvalidBlocks("cascade: spawn rates must be nonnegative");
}

JumpModel build_cascade(const CascadeSpec& spec) {
  spec.validate();
  const int C = spec.levels;
  const int N = spec.N;
  const Eigen::Index ma = spec.arrivals.order();
  const Mat& d0 = spec.arrivals.D0;
  const Mat& d1 = spec.arrivals.D[0];

  // Count coordinate: an arrival shifts n to n+1, saturating at N.
  Mat shift = Mat::Zero(N, N);
  for (int n = 0; n + 1 < N; ++n) shift(n, n + 1) = 1.0;
  shift(N - 1, N - 1) = 1.0;
  const Mat id_count = Mat::Identity(N, N);

  JumpModel jm;
  jm.C = C;
  jm.n_minus = ma * N;
  jm.Tmm.resize(C + 1);
  jm.ph.resize(C + 1);
  const Mat interior = kron(d0, id_count) + kron(d1, shift);
  for (int c = 1; c <= C; ++c) {
    jm.Tmm[c] = interior;
    if (c < C) jm.Tmm[c] -= spec.gamma[c - 1] * Mat::Identity(jm.n_minus, jm.n_minus);
    jm.ph[c].push_back(spec.ph[c - 1]);
  }
  for (int c = 1; c < C; ++c)
    jm.rules.push_back({c, c + 1, 1,
                        Mat(spec.gamma[c - 1] * Mat::Identity(jm.n_minus, jm.n_minus))});

  // Boundary: count one with zero fluid is the empty system; higher counts
  // are artificial dwell states (unit rate, frozen arrival phase) that
  // immediately start the next queued job.
  Mat t0 = Mat::Zero(jm.n_minus, jm.n_minus);
  Mat q0 = Mat::Zero(jm.n_minus, jm.n_minus);
  auto idx = [N](Eigen::Index i, int n) { return i * N + (n - 1); };
  for (Eigen::Index i = 0; i < ma; ++i) {
    for (Eigen::Index j = 0; j < ma; ++j) {
      t0(idx(i, 1), idx(j, 1)) = d0(i, j);
      q0(idx(i, 1), idx(j, 1)) = d1(i, j);
    }
    for (int n = 2; n <= N; ++n) {
      t0(idx(i, n), idx(i, n)) = -1.0;
      q0(idx(i, n), idx(i, n - 1)) = 1.0;
    }
  }
  jm.Tmm[0] = t0;
  jm.rules.push_back({0, 1, 1, q0});
  return jm;
}

double cascade_load(const CascadeSpec& spec, const SolverOptions& opts) {
  const int C = spec.levels;
  // Expected total work of a level-c job and its descendant tree.
  double w = spec.ph[C - 1].mean();
  for (int c = C - 1; c >= 1; --c) w = spec.ph[c - 1].mean() * (1.0 + spec.gamma[c - 1] * w);
  return spec.arrivals.arrival_rates(opts)[0] * w;
}

std::vector<double> cascade_queue_length_dist(const JumpSolution& js, const CascadeSpec& spec,
                                              const SolverOptions& opts) {
  if (!js.recurrent())
    throw NotRecurrent("cascade_queue_length_dist: model is not positive recurrent");
  const Mat m = joint_marginal(js, opts);
  const int C = js.colored.C;
  const int N = spec.N;
  const Eigen::Index ma = spec.arrivals.order();
  auto idx = [N](Eigen::Index i, int n) { return i * N + (n - 1); };

  std::vector<double> q(N + 1, 0.0);
  double kept = 0.0;
  for (Eigen::Index i = 0; i < ma; ++i) {
    q[0] += m(0, idx(i, 1));
    kept += m(0, idx(i, 1));
    // Boundary states with a higher count are the artificial dwell states;
    // censor them out.
    for (int n = 1; n <= N; ++n)
      for (int c = 1; c <= C; ++c) {
        q[n] += m(c, idx(i, n));
        kept += m(c, idx(i, n));
      }
  }
  if (!(kept > 0.0)) throw NotRecurrent("cascade_queue_length_dist: no mass outside dwell states");
  for (double& v : q) v /= kept;
  return q;
}

Eigen::Index cascade_phase_count(const CascadeSpec& spec) {
  Eigen::Index total = 0, level = 1;
  for (int c = 1; c <= spec.levels; ++c) {
    level *= spec.ph[c - 1].order();
    total += level;
  }
  return total;
}

std::vector<double> solve_finite_qbd(const CascadeSpec& spec, Eigen::Index max_phases,
                                     const SolverOptions& opts) {
  spec.validate();
  const int C = spec.levels;
  const Eigen::Index ma = spec.arrivals.order();
  const Eigen::Index nph = cascade_phase_count(spec);
  if (ma * nph > max_phases) {
    std::ostringstream msg;
    msg << "solve_finite_qbd: " << ma * nph << " phases exceed the bound " << max_phases;
    throw PhaseBlowup(msg.str());
  }

  // Phase space of one multi-level job under depth-first preemption: the
  // stack of service phases (m_1,...,m_c), level c in service. Stacks are
  // laid out level by level, last coordinate fastest.
  std::vector<Eigen::Index> width(C + 1, 0), base(C + 2, 0);
  {
    Eigen::Index level = 1;
    for (int c = 1; c <= C; ++c) {
      level *= spec.ph[c - 1].order();
      width[c] = level;
      base[c + 1] = base[c] + level;
    }
  }

  Mat u = Mat::Zero(nph, nph);
  Vec exit = Vec::Zero(nph);
  for (int c = 1; c <= C; ++c) {
    const PHDist& d = spec.ph[c - 1];
    const Eigen::Index k = d.order();
    const Vec done = d.exit_rates();
    for (Eigen::Index s = 0; s < width[c]; ++s) {
      const Eigen::Index g = base[c] + s;
      const Eigen::Index prefix = s / k;
      const Eigen::Index m = s % k;
      for (Eigen::Index m2 = 0; m2 < k; ++m2) u(g, base[c] + prefix * k + m2) += d.U(m, m2);
      if (c > 1)
        u(g, base[c - 1] + prefix) += done(m);  // resume the preempted parent
      else
        exit(g) += done(m);  // the whole descendant tree is finished
      if (c < C) {
        const double rate = spec.gamma[c - 1];
        if (rate > 0.0) {
          u(g, g) -= rate;
          const PHDist& child = spec.ph[c];
          for (Eigen::Index m2 = 0; m2 < child.order(); ++m2)
            u(g, base[c + 1] + s * child.order() + m2) += rate * child.alpha(m2);
        }
      }
    }
  }
  RowVec alpha = RowVec::Zero(nph);
  alpha.head(spec.ph[0].order()) = spec.ph[0].alpha;

  // Finite MAP/PH/1/N chain, levels 0..N by the number of level-1 jobs.
  const Mat& d0 = spec.arrivals.D0;
  const Mat& d1 = spec.arrivals.D[0];
  const int N = spec.N;
  const Eigen::Index blk = ma * nph;
  const Mat id_ph = Mat::Identity(nph, nph);
  const Mat id_a = Mat::Identity(ma, ma);

  const Mat local_mid = kron(d0, id_ph) + kron(id_a, u);
  const Mat local_top = kron(d0 + d1, id_ph) + kron(id_a, u);
  const Mat up_mid = kron(d1, id_ph);
  const Mat up0 = kron(d1, Mat(alpha));                    // ma x blk
  const Mat down_restart = kron(id_a, Mat(exit * alpha));  // blk x blk
  const Mat down1 = kron(id_a, Mat(exit));                 // blk x ma

  // Fold the levels down from the top: W_n is the generator censored on
  // levels <= n.
  std::vector<Eigen::PartialPivLU<Mat>> lu(N + 1);
  lu[N].compute(Mat(-local_top));
  for (int n = N - 1; n >= 1; --n) {
    Mat w = local_mid + up_mid * lu[n + 1].solve(down_restart);
    lu[n].compute(Mat(-w));
  }
  Mat w0 = d0 + up0 * lu[1].solve(down1);

  RowVec pi = stationary_vector(w0, opts);
  std::vector<RowVec> level(N + 1);
  level[0] = pi;
  RowVec cur = pi;
  for (int n = 1; n <= N; ++n) {
    const Mat& up = (n == 1) ? up0 : up_mid;
    const Vec solved = lu[n].transpose().solve(Vec((cur * up).transpose()));
    cur = solved.transpose();
    level[n] = cur;
  }

  std::vector<double> q(N + 1, 0.0);
  double total = 0.0;
  for (int n = 0; n <= N; ++n) {
    q[n] = level[n].sum();
    total += q[n];
  }
  for (double& v : q) v /= total;
  return q;
}

}  // namespace fluidq
