#pragma once

#include "hcorr/common.hpp"

#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace hcorr {

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

/// Compressed-row sparse matrix. Duplicate (row, col) pairs are summed at
/// construction; entries that sum to exactly zero are dropped.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(index_t rows, index_t cols, std::vector<Triplet> entries);

  static SparseMatrix identity(index_t n);

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t nonzeros() const { return static_cast<index_t>(values_.size()); }

  std::span<const index_t> row_cols(index_t r) const {
    return {col_idx_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
  }
  std::span<const double> row_values(index_t r) const {
    return {values_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
  }
  double coeff(index_t r, index_t c) const;

  Vector operator*(const Vector& x) const;
  Matrix to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

  /// Restriction to the given rows and columns (new index = position in list).
  SparseMatrix submatrix(std::span<const index_t> rows, std::span<const index_t> cols) const;

  bool is_symmetric(double tol) const;

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<index_t> row_ptr_{0};
  std::vector<index_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace hcorr
