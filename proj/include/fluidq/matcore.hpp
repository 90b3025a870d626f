#pragma once

#include "fluidq/types.hpp"

namespace fluidq {

// Stationary row vector v of an irreducible generator G: v G = 0, v >= 0,
// v e = 1. Throws NotAGenerator on structural violations and Reducible when
// the normalized solution is not unique.
RowVec stationary_vector(const Mat& g, const SolverOptions& opts = {});

// e^{A t} for t >= 0. (Sub)generators go through uniformization, which keeps
// the result entrywise nonnegative; everything else uses scaling-and-squaring
// with a [13/13] Pade approximant.
Mat expm(const Mat& a, double t, const SolverOptions& opts = {});

// Solves A X + X B + C = 0. Dense Bartels-Stewart via a complex Schur
// reduction above `sylvester_small_max`, direct Kronecker solve below.
// Throws SingularPencil when A and -B share an eigenvalue.
Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c,
                    const SolverOptions& opts = {});

// Element-wise minimal nonnegative solution Psi of
//   Tpp Psi + Psi Tmp Psi + Psi Tmm + Tpm = 0,
// where [[Tpp,Tpm],[Tmp,Tmm]] assembles into a (sub)generator. Structure-
// preserving doubling with a Newton polish; throws NoConvergence past the
// iteration cap and InvalidBlocks on malformed input.
Mat solve_nare(const Mat& tpp, const Mat& tpm, const Mat& tmp, const Mat& tmm,
               const SolverOptions& opts = {});

namespace detail {
// Kronecker product, used by the small Sylvester path and the QBD baseline.
Mat kron(const Mat& a, const Mat& b);
double inf_norm(const Mat& a);
}  // namespace detail

}  // namespace fluidq
