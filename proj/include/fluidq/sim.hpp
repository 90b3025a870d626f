#pragma once

#include "fluidq/jumps.hpp"

#include <cstdint>

namespace fluidq {

// Splittable counter-seeded generator: xoshiro256** streams keyed by
// (seed, stream) through splitmix64. Fully self-contained so results are
// bit-identical across platforms.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next();
  double u01();  // uniform in [0, 1)
  double exponential(double rate);

 private:
  std::uint64_t s_[4];
};

struct SimConfig {
  double horizon = 0.0;
  double warmup = 0.0;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<double> sample_grid;  // levels at which the empirical cdf is recorded
  // Optional boxes (one interval per color) whose occupancy fraction is
  // recorded; used to cross-check joint densities.
  std::vector<std::vector<std::pair<double, double>>> boxes;
  int threads = 0;  // 0: FLUIDQ_THREADS or hardware concurrency
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

// Raw per-replication time averages.
struct ReplicationStats {
  std::vector<double> level_cdf;             // censored process, per grid point
  std::vector<double> uncensored_level_cdf;  // with the jump rises played out at rate one
  std::vector<double> gamma;                 // top color occupancy, 0..C
  Mat background_marginal;                   // (C+1) x n_minus occupancy
  std::vector<double> box_occupancy;
  double utilization = 0.0;                  // fraction of time the fluid is positive
};

struct SimResult {
  std::vector<Estimate> level_cdf;
  std::vector<Estimate> uncensored_level_cdf;
  std::vector<Estimate> gamma;
  Mat background_marginal_mean;
  Mat background_marginal_se;
  std::vector<Estimate> box_occupancy;
  Estimate utilization;
  std::vector<ReplicationStats> replication;  // ordered by replication index
};

// Simulates the piecewise-deterministic jump queue exactly: competing
// exponential clocks per (top color, background state) regime, phase-type
// jump sizes by chain simulation, the color stack drained at rate one.
// Identical (seed, config) gives a bit-identical result; replications run
// independently and may execute in parallel.
SimResult simulate(const JumpModel& jm, const SimConfig& cfg);

}  // namespace fluidq
