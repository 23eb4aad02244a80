#include "hcorr/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace hcorr {

SparseMatrix::SparseMatrix(index_t rows, index_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw Error("sparse entry out of range");
    if (!std::isfinite(t.value)) throw Error("non-finite sparse entry");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const index_t r = entries[k].row, c = entries[k].col;
    double v = 0.0;
    for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k) v += entries[k].value;
    if (v == 0.0) continue;
    col_idx_.push_back(c);
    values_.push_back(v);
    ++row_ptr_[r + 1];
  }
  for (index_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

SparseMatrix SparseMatrix::identity(index_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (index_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

double SparseMatrix::coeff(index_t r, index_t c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

Vector SparseMatrix::operator*(const Vector& x) const {
  if (x.size() != cols_) throw Error("sparse matvec dimension mismatch");
  Vector y = Vector::Zero(rows_);
  for (index_t r = 0; r < rows_; ++r)
    for (index_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[r] += values_[k] * x[col_idx_[k]];
  return y;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(rows_, cols_);
  for (index_t r = 0; r < rows_; ++r)
    for (index_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
  return d;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(values_.size());
  for (index_t r = 0; r < rows_; ++r)
    for (index_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.emplace_back(r, col_idx_[k], values_[k]);
  Eigen::SparseMatrix<double> m(rows_, cols_);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix SparseMatrix::submatrix(std::span<const index_t> rows, std::span<const index_t> cols) const {
  std::vector<index_t> col_map(static_cast<std::size_t>(cols_), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<index_t>(j);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const index_t r = rows[i];
    for (index_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (const index_t c = col_map[col_idx_[k]]; c >= 0) t.push_back({static_cast<index_t>(i), c, values_[k]});
  }
  return SparseMatrix(static_cast<index_t>(rows.size()), static_cast<index_t>(cols.size()), std::move(t));
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (index_t r = 0; r < rows_; ++r)
    for (index_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (std::abs(values_[k] - coeff(col_idx_[k], r)) > tol) return false;
  return true;
}

}  // namespace hcorr
