#pragma once

#include "fluidq/colored.hpp"

namespace fluidq {

// Phase-type distribution: absorption time of the chain with sub-generator U
// started from alpha. alpha must be a proper distribution.
struct PHDist {
  RowVec alpha;
  Mat U;

  Eigen::Index order() const { return U.rows(); }
  Vec exit_rates() const { return -U * ones(order()); }
  double mean() const;
  void validate(double tol = 1e-10) const;  // throws InvalidBlocks
};

// Colored fluid queue where the fluid only drains; upward movements are
// instantaneous jumps with phase-type sizes. A jump rule (from, to, type)
// fires while the top color is `from` (0 = empty queue) and adds fluid of
// color `to >= max(from, 1)` sized by ph[to][type].
struct JumpModel {
  struct Rule {
    int from = 0;
    int to = 0;
    int type = 1;  // 1-based index into ph[to]
    Mat rate;      // n_minus x n_minus
  };

  int C = 0;
  Eigen::Index n_minus = 0;
  std::vector<Mat> Tmm;                 // 0..C, drain-phase background rates
  std::vector<std::vector<PHDist>> ph;  // 1..C, jump-size distributions per color
  std::vector<Rule> rules;

  int types(int color) const { return static_cast<int>(ph[color].size()); }
  void validate(const SolverOptions& opts = {}) const;  // throws InvalidBlocks
};

// Index bookkeeping for the expanded up-state space of one color:
// S_+ = S_- x {(type, phase)}, ordered background-major, then type, then phase.
struct ColorStateMap {
  Eigen::Index n_minus = 0;
  std::vector<Eigen::Index> order;   // per type, 1-based slot 0 unused
  std::vector<Eigen::Index> offset;  // phase offset of each type
  Eigen::Index phases = 0;           // sum of orders

  Eigen::Index size() const { return n_minus * phases; }
  Eigen::Index index(Eigen::Index background, int type, Eigen::Index phase) const;

  struct Triple {
    Eigen::Index background;
    int type;
    Eigen::Index phase;
  };
  Triple triple(Eigen::Index idx) const;
};

struct StateMap {
  std::vector<ColorStateMap> color;  // 1..C
};

// Replaces each jump by an interval where the fluid rises at rate one through
// the phases of its size distribution; the result is an ordinary colored
// model plus the index map of the synthetic up states.
std::pair<ColoredModel, StateMap> expand_jumps(const JumpModel& jm);

struct JumpSolution {
  ColoredSolution colored;  // solution of the expanded queue
  StateMap smap;
  // Censored boundary quantities (the rise intervals carry no probability
  // mass in the jump queue, so the normalizer drops the factor two):
  RowVec p_minus;
  std::vector<RowVec> q0;  // 1..C

  bool recurrent() const { return colored.recurrent; }
};

JumpSolution solve_jumps(const JumpModel& jm, const SolverOptions& opts = {});

// Censored stationary density over S_- at the color-amount vector xs.
RowVec jump_density(const JumpSolution& js, const std::vector<double>& xs,
                    const SolverOptions& opts = {});

double jump_level_cdf(const JumpSolution& js, double x, const SolverOptions& opts = {});

std::vector<double> jump_top_color_dist(const JumpSolution& js, const SolverOptions& opts = {});

// Joint stationary law of (top color, background state); row 0 is the
// boundary mass, row c integrates the censored density over the color-c
// region. Rows marginalize to the top-color law.
Mat joint_marginal(const JumpSolution& js, const SolverOptions& opts = {});

}  // namespace fluidq
