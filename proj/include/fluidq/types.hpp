#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fluidq {

// Dense real matrices in row-major storage; this is the layout used by the
// JSON model files and the CSV output, so we keep it in memory as well.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

inline Vec ones(Eigen::Index n) { return Vec::Ones(n); }

// Base class for all solver failures. Specific failure modes below carry the
// name of the violated contract.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct NotAGenerator : SolverError { using SolverError::SolverError; };
struct Reducible : SolverError { using SolverError::SolverError; };
struct SingularPencil : SolverError { using SolverError::SolverError; };
struct NoConvergence : SolverError { using SolverError::SolverError; };
struct InvalidBlocks : SolverError { using SolverError::SolverError; };
struct Unstable : SolverError { using SolverError::SolverError; };
struct NotRecurrent : SolverError { using SolverError::SolverError; };
struct InvalidPoint : SolverError { using SolverError::SolverError; };
struct HypothesisViolated : SolverError { using SolverError::SolverError; };
struct PhaseBlowup : SolverError { using SolverError::SolverError; };
struct InvalidThresholds : SolverError { using SolverError::SolverError; };

// Numerical knobs. The defaults are what the library is tested against;
// everything is absolute unless noted otherwise.
struct SolverOptions {
  double generator_tol = 1e-10;    // row-sum / off-diagonal validation
  double nare_step_tol = 1e-14;    // successive-iterate stop for the doubling iteration
  int nare_max_iter = 200;
  double nare_residual_tol = 1e-12;
  double sylvester_rel_tol = 1e-10;
  int sylvester_small_max = 8;     // Kronecker solve up to this dimension, Schur above
  bool use_sylvester_fast_path = true;  // route Riccati solves with zero down-to-up
                                        // block through the Sylvester solver
};

struct GeneratorCheck {
  bool is_generator = false;
  bool is_subgenerator = false;
  double max_row_sum_abs = 0.0;
};

GeneratorCheck check_generator(const Mat& a, double tol = 1e-10);

}  // namespace fluidq
