#pragma once

#include "hcorr/hmatrix.hpp"

#include <functional>

namespace hcorr {

struct LUFactors {
  HMatrix L;  ///< unit lower triangular, ones stored explicitly
  HMatrix U;  ///< upper triangular
};

/// Recursive block LU without pivoting on the block tree of A. Throws
/// NumericalError on a pivot below 1e-14 times the largest entry of its block.
LUFactors h_lu(const HMatrix& A, const Truncation& trunc);

enum class Side { left, right };

/// left:  X with L U X = B, i.e. X = (LU)^{-1} B.
/// right: X with X (LU)^T = B, i.e. X = B (LU)^{-T}.
/// B may live on a different block tree over the same cluster tree; X is
/// returned on the tree of B.
HMatrix h_triangular_solve(const LUFactors& f, const HMatrix& B, Side side, const Truncation& trunc);

/// (LU)^{-1} b for a vector in the permuted ordering.
Vector lu_solve(const LUFactors& f, const Vector& b);

// Node-level substitutions. L is read as unit lower, U as upper triangular.
void solve_lower_dense(const HNode& L, Eigen::Ref<Matrix> X);           // X := L^{-1} X
void solve_upper_dense(const HNode& U, Eigen::Ref<Matrix> X);           // X := U^{-1} X
void solve_upper_transposed_dense(const HNode& U, Eigen::Ref<Matrix> X);  // X := U^{-T} X
void solve_lower_left(const HNode& L, HNode& B, const Truncation& trunc);   // B := L^{-1} B
void solve_upper_left(const HNode& U, HNode& B, const Truncation& trunc);   // B := U^{-1} B
void solve_upper_right(const HNode& U, HNode& B, const Truncation& trunc);  // B := B U^{-1}

using LinearOp = std::function<Vector(const Vector&)>;

/// Power iteration on M^T M from a fixed-seed random start; returns the largest
/// ||M x_k|| over the normalised iterates, so more iterations never lower it.
double spectral_norm_estimate(const LinearOp& apply, const LinearOp& apply_transposed, index_t n,
                              int iterations = 10);

/// Estimate of ||L U - A||_2.
double lu_deviation(const HMatrix& A, const LUFactors& f, int iterations = 10);
/// Estimate of ||A||_2.
double h_spectral_norm(const HMatrix& A, int iterations = 10);

}  // namespace hcorr
