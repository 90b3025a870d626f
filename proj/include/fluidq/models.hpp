#pragma once

#include "fluidq/jumps.hpp"

namespace fluidq {

// Marked Markovian arrival process: D0 drives phase changes without an
// arrival, D[l] (0-based storage for type l+1) phase changes with a type-l+1
// arrival. D0 + sum_l D[l] is an irreducible generator.
struct MMAP {
  Mat D0;
  std::vector<Mat> D;

  Eigen::Index order() const { return D0.rows(); }
  int type_count() const { return static_cast<int>(D.size()); }
  void validate(const SolverOptions& opts = {}) const;

  Mat total_generator() const;
  // Stationary arrival rate of each type.
  std::vector<double> arrival_rates(const SolverOptions& opts = {}) const;
};

// Work offered per unit time: sum over types of arrival rate times mean job
// size.
double mmap_load(const MMAP& arrivals, const std::vector<PHDist>& services,
                 const SolverOptions& opts = {});

// Thins every arrival stream by the factor s (s > 1 speeds arrivals up);
// discarded arrival events become plain phase changes, so the stationary
// phase process is unchanged.
MMAP scale_arrivals(const MMAP& arrivals, double s);

// Single-server preemptive-resume LCFS queue with per-type admission
// thresholds: a type-l job is accepted only while fewer than thresholds[l]
// jobs (of any type) are present. Thresholds are positive integers or
// infinity, at least one finite.
struct LCFSSpec {
  MMAP arrivals;
  std::vector<PHDist> services;    // per type, 0-based
  std::vector<double> thresholds;  // per type, 0-based; INFINITY allowed
};

JumpModel build_lcfs(const LCFSSpec& spec);

// Per-type (original order) probability that an arriving job is rejected:
// ratio of the rejected arrival rate to the offered arrival rate.
std::vector<double> lcfs_loss_probability(const JumpSolution& js, const LCFSSpec& spec,
                                          const SolverOptions& opts = {});

// FCFS queue of multi-level jobs: a level-c job in service spawns level-(c+1)
// jobs at rate gamma[c-1]; descendants are served depth-first with
// preemption; up to N level-1 jobs fit.
struct CascadeSpec {
  MMAP arrivals;           // single type: D0, D[0]
  int levels = 1;          // C
  std::vector<PHDist> ph;  // per level, 0-based
  std::vector<double> gamma;  // spawn rate during level-c service, size levels-1
  int N = 1;

  void validate(const SolverOptions& opts = {}) const;
};

JumpModel build_cascade(const CascadeSpec& spec);

// Offered load: arrival rate times the expected total work of one level-1 job
// including its whole descendant tree.
double cascade_load(const CascadeSpec& spec, const SolverOptions& opts = {});

// Level-1 queue-length law 0..N from the solved cascade model: censors the
// artificial boundary dwell states and aggregates by the count coordinate.
std::vector<double> cascade_queue_length_dist(const JumpSolution& js, const CascadeSpec& spec,
                                              const SolverOptions& opts = {});

// Exact queue-length law via the classical finite quasi-birth-death chain
// with the multi-level job expanded into one phase-type service (depth-first
// preemptive traversal). Phase count grows geometrically with the level
// count; refuses above max_phases (count includes the arrival phases).
std::vector<double> solve_finite_qbd(const CascadeSpec& spec, Eigen::Index max_phases = 8000,
                                     const SolverOptions& opts = {});

// Phase count of the expanded multi-level job representation.
Eigen::Index cascade_phase_count(const CascadeSpec& spec);

}  // namespace fluidq
