#include "fluidq/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace fluidq {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  (void)splitmix64(state);
  state ^= 0xD1B54A32D192ED03ull * (stream + 1);
  for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log1p(-u01()) / rate; }

namespace {

struct Outcome {
  double cum_rate;  // cumulative within the row
  int kind;         // 0: background move, 1: jump
  Eigen::Index to_state;
  int to_color;  // jumps only
  int type;      // jumps only, 1-based
};

struct RegimeRow {
  double total = 0.0;
  std::vector<Outcome> outcomes;
};

struct PhSampler {
  // Per phase: total exit rate and cumulative destinations (phases then
  // absorption last).
  struct Phase {
    double rate = 0.0;
    std::vector<std::pair<double, Eigen::Index>> moves;  // -1 = absorb
  };
  RowVec alpha_cum;
  std::vector<Phase> phases;

  explicit PhSampler(const PHDist& d) {
    const Eigen::Index m = d.order();
    alpha_cum.resize(m);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      acc += d.alpha(i);
      alpha_cum(i) = acc;
    }
    const Vec exits = d.exit_rates();
    phases.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& p = phases[i];
      double cum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j) continue;
        const double r = d.U(i, j);
        if (r > 0.0) {
          cum += r;
          p.moves.push_back({cum, j});
        }
      }
      if (exits(i) > 0.0) {
        cum += exits(i);
        p.moves.push_back({cum, Eigen::Index(-1)});
      }
      p.rate = cum;
    }
  }

  double sample(Rng& rng) const {
    const double u = u_pick(rng, alpha_cum(alpha_cum.size() - 1));
    Eigen::Index phase = 0;
    while (phase + 1 < alpha_cum.size() && alpha_cum(phase) <= u) ++phase;
    double total = 0.0;
    while (true) {
      const Phase& p = phases[phase];
      total += rng.exponential(p.rate);
      const double pick = u_pick(rng, p.rate);
      size_t k = 0;
      while (k + 1 < p.moves.size() && p.moves[k].first <= pick) ++k;
      if (p.moves[k].second < 0) return total;
      phase = p.moves[k].second;
    }
  }

  static double u_pick(Rng& rng, double total) { return rng.u01() * total; }
};

int thread_budget(int requested, int jobs) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("FLUIDQ_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return std::max(1, std::min(n, jobs));
}

struct Accumulators {
  std::vector<double> cdf_time;       // censored occupancy below each grid level
  std::vector<double> unc_cdf_time;   // plus the rise intervals
  std::vector<double> gamma_time;     // per top color
  Mat marginal_time;                  // (C+1) x n_minus
  std::vector<double> box_time;
  double busy_time = 0.0;
  double down_total = 0.0;  // measured window length
  double rise_total = 0.0;  // total rise duration inside the window
};

class Engine {
 public:
  Engine(const JumpModel& jm, const SimConfig& cfg) : jm_(jm), cfg_(cfg) {
    const int C = jm.C;
    rows_.resize(C + 1);
    for (int c = 0; c <= C; ++c) {
      rows_[c].resize(jm.n_minus);
      for (Eigen::Index i = 0; i < jm.n_minus; ++i) {
        RegimeRow& row = rows_[c][i];
        double cum = 0.0;
        for (Eigen::Index j = 0; j < jm.n_minus; ++j) {
          if (i == j) continue;
          const double r = jm.Tmm[c](i, j);
          if (r > 0.0) {
            cum += r;
            row.outcomes.push_back({cum, 0, j, 0, 0});
          }
        }
        for (const auto& rule : jm.rules) {
          if (rule.from != c) continue;
          for (Eigen::Index j = 0; j < jm.n_minus; ++j) {
            const double r = rule.rate(i, j);
            if (r > 0.0) {
              cum += r;
              row.outcomes.push_back({cum, 1, j, rule.to, rule.type});
            }
          }
        }
        row.total = cum;
      }
    }
    samplers_.resize(C + 1);
    for (int c = 1; c <= C; ++c)
      for (const auto& d : jm.ph[c]) samplers_[c].emplace_back(d);
  }

  ReplicationStats run(int rep) const {
    Rng rng(cfg_.seed, static_cast<std::uint64_t>(rep));
    const int C = jm_.C;
    const double horizon = cfg_.horizon, warmup = cfg_.warmup;

    Accumulators acc;
    acc.cdf_time.assign(cfg_.sample_grid.size(), 0.0);
    acc.unc_cdf_time.assign(cfg_.sample_grid.size(), 0.0);
    acc.gamma_time.assign(C + 1, 0.0);
    acc.marginal_time = Mat::Zero(C + 1, jm_.n_minus);
    acc.box_time.assign(cfg_.boxes.size(), 0.0);

    std::vector<double> x(C + 1, 0.0);
    int top = 0;
    Eigen::Index bg = 0;
    double t = 0.0, level = 0.0;

    while (t < horizon) {
      const RegimeRow& row = rows_[top][bg];
      const double until_event =
          row.total > 0.0 ? rng.exponential(row.total) : std::numeric_limits<double>::infinity();
      const double until_boundary =
          top >= 1 ? x[top] : std::numeric_limits<double>::infinity();
      const double step = std::min({until_event, until_boundary, horizon - t});

      record_segment(acc, t, step, top, bg, level, x);
      if (top >= 1) {
        x[top] -= step;
        level -= step;
      }
      t += step;
      if (t >= horizon) break;

      if (until_boundary <= until_event) {
        // The top color drained away with no event; the color below (with
        // its own rate matrix) takes over.
        x[top] = 0.0;
        while (top >= 1 && x[top] <= 0.0) {
          x[top] = 0.0;
          --top;
        }
        if (top == 0) level = 0.0;
        continue;
      }

      const double pick = rng.u01() * row.total;
      size_t k = 0;
      while (k + 1 < row.outcomes.size() && row.outcomes[k].cum_rate <= pick) ++k;
      const Outcome& o = row.outcomes[k];
      if (o.kind == 0) {
        bg = o.to_state;
      } else {
        const double h = samplers_[o.to_color][o.type - 1].sample(rng);
        if (t > warmup) {
          record_rise(acc, level, h);
          acc.rise_total += h;
        }
        x[o.to_color] += h;
        level += h;
        bg = o.to_state;
        top = o.to_color;
#ifndef NDEBUG
        for (int c = top + 1; c <= C; ++c) assert(x[c] == 0.0);
#endif
      }
    }

    ReplicationStats out;
    const double window = horizon - warmup;
    out.level_cdf.resize(cfg_.sample_grid.size());
    out.uncensored_level_cdf.resize(cfg_.sample_grid.size());
    for (size_t g = 0; g < cfg_.sample_grid.size(); ++g) {
      out.level_cdf[g] = acc.cdf_time[g] / window;
      out.uncensored_level_cdf[g] =
          (acc.cdf_time[g] + acc.unc_cdf_time[g]) / (window + acc.rise_total);
    }
    out.gamma.resize(C + 1);
    for (int c = 0; c <= C; ++c) out.gamma[c] = acc.gamma_time[c] / window;
    out.background_marginal = acc.marginal_time / window;
    out.box_occupancy.resize(cfg_.boxes.size());
    for (size_t b = 0; b < cfg_.boxes.size(); ++b) out.box_occupancy[b] = acc.box_time[b] / window;
    out.utilization = acc.busy_time / window;
    return out;
  }

 private:
  // Occupancy bookkeeping for one drain (or boundary dwell) segment of
  // duration `step` starting at time t; the top amount and the level fall
  // linearly, everything else is frozen.
  void record_segment(Accumulators& acc, double t, double step, int top, Eigen::Index bg,
                      double level, const std::vector<double>& x) const {
    const double lo = std::max(t, cfg_.warmup);
    const double hi = std::min(t + step, cfg_.horizon);
    if (hi <= lo) return;
    const double d = hi - lo;
    const double drained = lo - t;  // part of the segment before the window opens
    const double level0 = top >= 1 ? level - drained : 0.0;
    const double top0 = top >= 1 ? x[top] - drained : 0.0;

    acc.down_total += d;
    acc.gamma_time[top] += d;
    acc.marginal_time(top, bg) += d;
    if (top >= 1) acc.busy_time += d;

    for (size_t g = 0; g < cfg_.sample_grid.size(); ++g) {
      const double lim = cfg_.sample_grid[g];
      if (top == 0)
        acc.cdf_time[g] += d;
      else
        acc.cdf_time[g] += std::clamp(lim - (level0 - d), 0.0, d);
    }
    for (size_t b = 0; b < cfg_.boxes.size(); ++b) {
      const auto& box = cfg_.boxes[b];
      bool frozen_ok = true;
      for (int c = 1; c <= jm_.C && frozen_ok; ++c) {
        if (c == top) continue;
        const double v = x[c];
        frozen_ok = box[c - 1].first <= v && v <= box[c - 1].second;
      }
      if (!frozen_ok) continue;
      if (top == 0) {
        acc.box_time[b] += d;
      } else {
        const double blo = box[top - 1].first, bhi = box[top - 1].second;
        const double enter = std::clamp(top0 - bhi, 0.0, d);   // time until the coord falls to bhi
        const double leave = std::clamp(top0 - blo, 0.0, d);   // time until it falls to blo
        acc.box_time[b] += leave - enter;
      }
    }
  }

  // A jump of size h at level z: in the uncensored queue the level rises
  // through (z, z+h) at rate one.
  void record_rise(Accumulators& acc, double z, double h) const {
    for (size_t g = 0; g < cfg_.sample_grid.size(); ++g)
      acc.unc_cdf_time[g] += std::clamp(cfg_.sample_grid[g] - z, 0.0, h);
  }

  const JumpModel& jm_;
  const SimConfig& cfg_;
  std::vector<std::vector<RegimeRow>> rows_;
  std::vector<std::vector<PhSampler>> samplers_;
};

Estimate summarize(const std::vector<double>& values) {
  Estimate e;
  const size_t n = values.size();
  for (double v : values) e.mean += v;
  e.mean /= static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return e;
}

}  // namespace

SimResult simulate(const JumpModel& jm, const SimConfig& cfg) {
  jm.validate();
  if (!(cfg.horizon > cfg.warmup) || cfg.warmup < 0.0)
    throw std::invalid_argument("simulate: need horizon > warmup >= 0");
  if (cfg.replications < 1) throw std::invalid_argument("simulate: need at least one replication");
  for (const auto& box : cfg.boxes)
    if (static_cast<int>(box.size()) != jm.C)
      throw std::invalid_argument("simulate: each box needs one interval per color");

  const Engine engine(jm, cfg);
  const int reps = cfg.replications;
  std::vector<ReplicationStats> stats(reps);

  const int workers = thread_budget(cfg.threads, reps);
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) stats[r] = engine.run(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1))
          stats[r] = engine.run(r);
      });
    for (auto& th : pool) th.join();
  }

  SimResult out;
  out.replication = stats;
  auto collect = [&](auto getter) {
    std::vector<double> v(reps);
    for (int r = 0; r < reps; ++r) v[r] = getter(stats[r]);
    return summarize(v);
  };

  const size_t grid = cfg.sample_grid.size();
  out.level_cdf.resize(grid);
  out.uncensored_level_cdf.resize(grid);
  for (size_t g = 0; g < grid; ++g) {
    out.level_cdf[g] = collect([&](const ReplicationStats& s) { return s.level_cdf[g]; });
    out.uncensored_level_cdf[g] =
        collect([&](const ReplicationStats& s) { return s.uncensored_level_cdf[g]; });
  }
  out.gamma.resize(jm.C + 1);
  for (int c = 0; c <= jm.C; ++c)
    out.gamma[c] = collect([&](const ReplicationStats& s) { return s.gamma[c]; });
  out.box_occupancy.resize(cfg.boxes.size());
  for (size_t b = 0; b < cfg.boxes.size(); ++b)
    out.box_occupancy[b] = collect([&](const ReplicationStats& s) { return s.box_occupancy[b]; });
  out.utilization = collect([](const ReplicationStats& s) { return s.utilization; });

  out.background_marginal_mean = Mat::Zero(jm.C + 1, jm.n_minus);
  out.background_marginal_se = Mat::Zero(jm.C + 1, jm.n_minus);
  for (int c = 0; c <= jm.C; ++c)
    for (Eigen::Index i = 0; i < jm.n_minus; ++i) {
      const Estimate e =
          collect([&](const ReplicationStats& s) { return s.background_marginal(c, i); });
      out.background_marginal_mean(c, i) = e.mean;
      out.background_marginal_se(c, i) = e.se;
    }
  return out;
}

}  // namespace fluidq
