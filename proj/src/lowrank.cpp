#include "hcorr/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hcorr {

RkMatrix::RkMatrix(Matrix u, Matrix v) : U(std::move(u)), V(std::move(v)) {
  if (U.cols() != V.cols()) throw Error("RkMatrix: factor ranks differ");
}

RkMatrix RkMatrix::zero(index_t rows, index_t cols) { return RkMatrix(Matrix(rows, 0), Matrix(cols, 0)); }

double RkMatrix::frobenius_norm() const {
  if (rank() == 0) return 0.0;
  const Matrix gu = U.transpose() * U;
  const Matrix gv = V.transpose() * V;
  return std::sqrt(std::max(0.0, (gu.array() * gv.array()).sum()));
}

namespace {

index_t keep_count(const Vector& sigma, double tol, index_t max_rank) {
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) return 0;
  const double cut = std::max(tol, truncation_floor) * sigma[0];
  index_t r = 0;
  while (r < sigma.size() && r < max_rank && sigma[r] > cut) ++r;
  return r;
}

double tail_norm(const Vector& sigma, index_t r) {
  return sigma.size() > r ? sigma.tail(sigma.size() - r).norm() : 0.0;
}

}  // namespace

RkMatrix compress_dense(const Matrix& M, double tol, index_t max_rank, double* discarded) {
  if (M.size() == 0 || M.isZero(0.0)) {
    if (discarded) *discarded = 0.0;
    return RkMatrix::zero(M.rows(), M.cols());
  }
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const index_t r = keep_count(s, tol, max_rank);
  if (discarded) *discarded = tail_norm(s, r);
  return RkMatrix(svd.matrixU().leftCols(r) * s.head(r).asDiagonal(), svd.matrixV().leftCols(r));
}

RkMatrix truncate(const RkMatrix& R, double tol, index_t max_rank, double* discarded) {
  const index_t k = R.rank();
  const index_t m = R.rows(), n = R.cols();
  if (k == 0) {
    if (discarded) *discarded = 0.0;
    return R;
  }
  if (k >= std::min(m, n)) return compress_dense(R.to_dense(), tol, max_rank, discarded);

  Eigen::HouseholderQR<Matrix> qu(R.U), qv(R.V);
  const Matrix ru = qu.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Matrix rv = qv.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(ru * rv.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const index_t r = keep_count(s, tol, max_rank);
  if (discarded) *discarded = tail_norm(s, r);
  if (r == 0) return RkMatrix::zero(m, n);
  Matrix U = Matrix::Zero(m, r), V = Matrix::Zero(n, r);
  U.topRows(k) = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
  V.topRows(k) = svd.matrixV().leftCols(r);
  U.applyOnTheLeft(qu.householderQ());
  V.applyOnTheLeft(qv.householderQ());
  return RkMatrix(std::move(U), std::move(V));
}

AcaResult aca(const EntryFn& entry, index_t rows, index_t cols, double tol, index_t max_rank) {
  AcaResult res;
  if (rows == 0 || cols == 0 || max_rank <= 0) {
    res.approx = RkMatrix::zero(rows, cols);
    return res;
  }
  constexpr int max_zero_rows = 3;
  std::vector<Vector> us, vs;
  std::vector<bool> used_row(static_cast<std::size_t>(rows), false);
  std::vector<bool> used_col(static_cast<std::size_t>(cols), false);
  double norm2 = 0.0;
  index_t i = 0;
  int zero_rows = 0;

  while (static_cast<index_t>(us.size()) < max_rank) {
    Vector row(cols);
    for (index_t j = 0; j < cols; ++j) row[j] = entry(i, j);
    res.entries_evaluated += cols;
    // residual entries at roundoff level of the raw row count as zero
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * row.cwiseAbs().maxCoeff();
    for (std::size_t l = 0; l < us.size(); ++l) row -= us[l][i] * vs[l];
    used_row[i] = true;

    index_t jp = -1;
    double best = floor;
    for (index_t j = 0; j < cols; ++j)
      if (!used_col[j] && std::abs(row[j]) > best) best = std::abs(row[j]), jp = j;

    auto next_row = [&](const Vector* weights) {
      index_t ip = -1;
      double w = -1.0;
      for (index_t r = 0; r < rows; ++r)
        if (!used_row[r]) {
          const double v = weights ? std::abs((*weights)[r]) : 0.0;
          if (v > w) w = v, ip = r;
        }
      return ip;
    };

    if (jp < 0) {
      // Zero residual row: either the block is exhausted or we broke down.
      if (++zero_rows >= max_zero_rows) {
        res.stagnated = !us.empty();
        break;
      }
      i = next_row(nullptr);
      if (i < 0) break;
      continue;
    }
    zero_rows = 0;

    Vector v = row / row[jp];
    Vector u(rows);
    for (index_t r = 0; r < rows; ++r) u[r] = entry(r, jp);
    res.entries_evaluated += rows;
    for (std::size_t l = 0; l < us.size(); ++l) u -= vs[l][jp] * us[l];
    used_col[jp] = true;

    const double uu = u.squaredNorm(), vv = v.squaredNorm();
    for (std::size_t l = 0; l < us.size(); ++l) norm2 += 2.0 * us[l].dot(u) * vs[l].dot(v);
    norm2 += uu * vv;
    us.push_back(std::move(u));
    vs.push_back(std::move(v));

    if (std::sqrt(uu * vv) <= tol * std::sqrt(std::max(norm2, 0.0))) break;
    i = next_row(&us.back());
    if (i < 0) break;
  }

  const auto k = static_cast<index_t>(us.size());
  Matrix U(rows, k), V(cols, k);
  for (index_t l = 0; l < k; ++l) {
    U.col(l) = us[l];
    V.col(l) = vs[l];
  }
  res.approx = RkMatrix(std::move(U), std::move(V));
  return res;
}

PivotedCholeskyResult pivoted_cholesky(const Vector& diagonal, const EntryFn& entry, double tol,
                                       index_t max_rank) {
  const index_t n = diagonal.size();
  PivotedCholeskyResult res;
  Vector d = diagonal;
  const double dmax = n > 0 ? d.maxCoeff() : 0.0;
  for (index_t i = 0; i < n; ++i)
    if (d[i] < -1e-12) throw NumericalError("pivoted_cholesky: negative diagonal entry (matrix not PSD)");
  d = d.cwiseMax(0.0);
  std::vector<bool> pivoted(static_cast<std::size_t>(n), false);
  std::vector<Vector> cols;
  double err = d.sum();
  res.trace_history.push_back(err);

  while (err > tol && static_cast<index_t>(cols.size()) < std::min(max_rank, n)) {
    index_t p = 0;
    d.maxCoeff(&p);
    if (!(d[p] > 0.0)) break;
    Vector l(n);
    for (index_t i = 0; i < n; ++i) l[i] = entry(i, p);
    for (const auto& c : cols) l -= c[p] * c;
    l /= std::sqrt(d[p]);
    for (index_t i = 0; i < n; ++i) {
      d[i] -= l[i] * l[i];
      if (d[i] < -1e-12 * std::max(1.0, dmax))
        throw NumericalError("pivoted_cholesky: negative Schur complement diagonal (matrix not PSD)");
    }
    pivoted[p] = true;
    for (index_t i = 0; i < n; ++i)
      if (pivoted[i] || d[i] < 0.0) d[i] = 0.0;
    res.pivots.push_back(p);
    cols.push_back(std::move(l));
    err = d.sum();
    res.trace_history.push_back(err);
  }
  res.trace_error = err;
  res.L.resize(n, static_cast<index_t>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) res.L.col(static_cast<index_t>(k)) = cols[k];
  return res;
}

}  // namespace hcorr
