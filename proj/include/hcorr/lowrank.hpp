#pragma once

#include "hcorr/common.hpp"

#include <functional>
#include <vector>

namespace hcorr {

using EntryFn = std::function<double(index_t, index_t)>;

/// Factorized low-rank block U * V^T.
struct RkMatrix {
  Matrix U;
  Matrix V;

  RkMatrix() = default;
  RkMatrix(Matrix u, Matrix v);
  static RkMatrix zero(index_t rows, index_t cols);

  index_t rows() const { return U.rows(); }
  index_t cols() const { return V.rows(); }
  index_t rank() const { return U.cols(); }
  Matrix to_dense() const { return U * V.transpose(); }
  /// Exact ||U V^T||_F through the Gram matrices.
  double frobenius_norm() const;
  std::size_t bytes() const { return sizeof(double) * static_cast<std::size_t>(rank() * (rows() + cols())); }
};

/// Relative singular-value threshold used when neither tolerance nor rank
/// removes anything: sigma_i <= max(tol, 1e-16) * sigma_1 is discarded.
inline constexpr double truncation_floor = 1e-16;

/// QR + SVD recompression. Keeps sigma_i > max(tol, 1e-16) * sigma_1, at most
/// max_rank of them. If `discarded` is given, it receives sqrt(sum of dropped sigma^2).
RkMatrix truncate(const RkMatrix& R, double tol, index_t max_rank, double* discarded = nullptr);

/// Truncated SVD of a dense block.
RkMatrix compress_dense(const Matrix& M, double tol, index_t max_rank, double* discarded = nullptr);

struct AcaResult {
  RkMatrix approx;
  bool stagnated = false;       ///< hit a zero pivot before the tolerance was met
  index_t entries_evaluated = 0;
};

/// Adaptive cross approximation with partial pivoting, starting at row 0. Stops
/// when ||u_k|| ||v_k|| <= tol * ||S_k||_F (incremental estimate) or at max_rank.
AcaResult aca(const EntryFn& entry, index_t rows, index_t cols, double tol, index_t max_rank);

struct PivotedCholeskyResult {
  Matrix L;                            ///< N x k factor, C ~ L L^T
  double trace_error = 0.0;            ///< trace of the remaining Schur complement
  std::vector<index_t> pivots;
  std::vector<double> trace_history;   ///< trace error before each step and at the end
};

/// Greedy diagonally pivoted Cholesky of a PSD matrix given by its diagonal and
/// an entry generator. Stops when the remaining trace is <= tol or at max_rank.
PivotedCholeskyResult pivoted_cholesky(const Vector& diagonal, const EntryFn& entry, double tol,
                                       index_t max_rank);

}  // namespace hcorr
