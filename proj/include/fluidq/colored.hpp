#pragma once

#include "fluidq/classic.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fluidq {

// Sparse table of per-color-pair blocks (c, c') with c' > c. Absent entries
// are zero. Colors are 1-based throughout this module, matching the usual
// notation for ordered colors.
class ColorBlockTable {
 public:
  ColorBlockTable() = default;
  explicit ColorBlockTable(int colors) { resize(colors); }

  void resize(int colors) { rows_.assign(static_cast<size_t>(colors) + 1, {}); }
  int colors() const { return static_cast<int>(rows_.size()) - 1; }

  void set(int c, int cp, Mat m);
  const Mat* get(int c, int cp) const;  // nullptr when the block is zero
  const std::vector<std::pair<int, Mat>>& row(int c) const;

 private:
  std::vector<std::vector<std::pair<int, Mat>>> rows_;  // sorted by target color
};

// Fluid queue whose fluid is stacked by color; rate matrices of the
// background process depend on the top color. Per-color vectors are indexed
// 1..C (slot 0 unused except where noted).
struct ColoredModel {
  int C = 0;
  Eigen::Index n_minus = 0;
  std::vector<Eigen::Index> n_plus;  // 1..C
  std::vector<Mat> Tmm;              // 1..C, down/down while top color is c
  std::vector<Mat> Tmp;              // 1..C, down-to-up within color c
  std::vector<Mat> Tpp;              // 1..C, up/up within color c
  std::vector<Mat> Tpm;              // 1..C, up-to-down within color c
  ColorBlockTable Tmp2;              // down-to-up with a color change
  ColorBlockTable Tpp2;              // up-to-up with a color change
  Mat T0mm;                          // boundary down/down
  std::vector<Mat> T0mp;             // 1..C, boundary down-to-up per color
};

struct Diagnostic {
  std::string block;
  Eigen::Index row = -1;
  std::string message;
  double value = 0.0;
};

// Structural validation; returns one entry per violated invariant and an
// empty list iff the model is well formed.
std::vector<Diagnostic> validate(const ColoredModel& model, const SolverOptions& opts = {});

struct ColoredSolution {
  int C = 0;
  Eigen::Index n_minus = 0;
  std::vector<Eigen::Index> n_plus;                // 1..C
  std::vector<Mat> Psi;                            // 1..C, first-return probabilities
  std::vector<Mat> Kc;                             // 1..C, per-color decay sub-generators
  ColorBlockTable Kup;                             // upper blocks of the big K
  std::vector<std::pair<double, double>> drifts;   // 1..C, (xi_plus e, xi_minus e)
  bool recurrent = false;

  // Populated only when recurrent:
  RowVec p_minus;             // boundary mass over S_-
  std::vector<RowVec> q0;     // 1..C, p_minus * T0mp[c]
  std::vector<Vec> y_inf;     // 1..C, blocks of (-Kbig)^{-1} e

  Eigen::Index total_plus() const;
  // Materializes the big upper block-triangular K; diagonal blocks Kc,
  // block (c, c') = Tpp2[c][c'] + Psi[c] Tmp2[c][c']. Built on demand.
  Mat kbig() const;
};

ColoredSolution solve_colored(const ColoredModel& model, const SolverOptions& opts = {});

// Stationary density at the color-amount vector xs (xs[c-1] is the amount of
// color c); returns the up-block over S_+ of the top positive color plus the
// down-block over S_-.
std::pair<RowVec, RowVec> density(const ColoredSolution& sol, const ColoredModel& model,
                                  const std::vector<double>& xs, const SolverOptions& opts = {});

// P[total fluid level <= x].
double level_cdf(const ColoredSolution& sol, double x, const SolverOptions& opts = {});

// Distribution of the top color, entries 0..C (0 = empty queue). Dispatches
// to the linear-in-C recursion when no colors can be skipped and the
// boundary feeds only color 1; otherwise uses the dense route.
std::vector<double> top_color_dist(const ColoredSolution& sol, const SolverOptions& opts = {});
// The two routes individually (the recursive one throws InvalidBlocks when
// its structural conditions fail).
std::vector<double> top_color_dist_general(const ColoredSolution& sol,
                                           const SolverOptions& opts = {});
std::vector<double> top_color_dist_recursive(const ColoredSolution& sol,
                                             const SolverOptions& opts = {});

// Collapses a colored model whose down-rate matrices do not depend on the
// color (and whose only down-to-up rates target the last color) into a
// classic model with stacked blocks. Throws HypothesisViolated naming the
// first failing condition.
ClassicModel reduce_to_classic(const ColoredModel& model);

// Residuals of the stationary balance equations of a two-color model,
// evaluated on the analytic densities with central differences of step h for
// the derivative terms. Boundary-condition residuals are exact identities.
struct PdeResiduals {
  double down_interior = 0.0;   // down states, both amounts positive
  double up_interior = 0.0;     // up states, both amounts positive
  double down_axis = 0.0;       // down states on the color-1 axis
  double up_axis = 0.0;         // up states on the color-1 axis
  double bc_color_switch = 0.0; // color-2 layer opening above the axis
  double bc_origin_upper = 0.0; // color-2 layer opening at the origin
  double bc_origin_lower = 0.0; // color-1 layer opening at the origin
  double max_interior() const;
  double max_boundary() const;
};

PdeResiduals pde_residual(const ColoredSolution& sol, const ColoredModel& model, double x,
                          double y, double h, const SolverOptions& opts = {});

namespace detail {
// Solves (-Kbig) w = rhs blockwise (backward over colors); rhs and the result
// are stacked per color 1..C.
std::vector<Vec> solve_neg_kbig(const ColoredSolution& sol, const std::vector<Vec>& rhs);
// Core of the top-color law shared with the jump variant: factor is 2 for the
// plain colored queue and 1 for the censored jump queue.
std::vector<double> top_color_core(const ColoredSolution& sol, const RowVec& p_minus,
                                   const std::vector<RowVec>& q0, double factor, bool recursive,
                                   const SolverOptions& opts);
bool recursion_applicable(const ColoredSolution& sol, const std::vector<RowVec>& q0);
double level_cdf_core(const ColoredSolution& sol, const RowVec& p_minus,
                      const std::vector<RowVec>& q0, double factor, double x,
                      const SolverOptions& opts);
}  // namespace detail

}  // namespace fluidq
