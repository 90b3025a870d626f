#pragma once

#include "fluidq/matcore.hpp"

#include <utility>

namespace fluidq {

// Fluid queue driven at rate +/-1 by a finite background chain. The four
// interior blocks assemble into a generator; the boundary row
// [T0mm | T0mp] is a generator over the level-zero states.
struct ClassicModel {
  Mat Tpp, Tpm, Tmp, Tmm;
  Mat T0mm, T0mp;

  Eigen::Index n_plus() const { return Tpp.rows(); }
  Eigen::Index n_minus() const { return Tmm.rows(); }

  // Throws InvalidBlocks on any dimension or generator violation.
  void validate(const SolverOptions& opts = {}) const;
};

struct ClassicSolution {
  Mat Psi;          // first-return probabilities, n_plus x n_minus
  Mat K;            // Tpp + Psi*Tmp, sub-generator
  RowVec p_minus;   // boundary mass over the down states
  bool stable = false;

  RowVec boundary_flow;  // p_minus * T0mp, cached for evaluation
};

ClassicSolution solve_classic(const ClassicModel& model, const SolverOptions& opts = {});

// Stationary density at level x > 0, split into the up- and down-state blocks.
std::pair<RowVec, RowVec> classic_density(const ClassicSolution& sol, double x,
                                          const SolverOptions& opts = {});

// P[fluid level <= x].
double classic_level_cdf(const ClassicSolution& sol, double x, const SolverOptions& opts = {});

}  // namespace fluidq
