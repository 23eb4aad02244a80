#include "hcorr/hlu.hpp"

#include <cmath>
#include <random>

namespace hcorr {

namespace {

void dense_lu(Matrix& M) {
  const index_t n = M.rows();
  const double scale = M.cwiseAbs().maxCoeff();
  for (index_t k = 0; k < n; ++k) {
    const double p = M(k, k);
    if (!(std::abs(p) >= 1e-14 * scale) || scale == 0.0)
      throw NumericalError("h_lu: numerically singular pivot in a diagonal block");
    const index_t r = n - k - 1;
    if (r == 0) break;
    M.col(k).tail(r) /= p;
    M.bottomRightCorner(r, r).noalias() -= M.col(k).tail(r) * M.row(k).tail(r);
  }
}

bool is_diagonal(const HNode& n) { return n.row_begin == n.col_begin && n.row_end == n.col_end; }

void lu_node(HNode& M, const Truncation& trunc) {
  if (M.is_dense()) {
    dense_lu(M.dense());
    return;
  }
  if (!M.is_subdivided() || M.grid_rows != M.grid_cols)
    throw StructureError("h_lu: diagonal block is not dense or square-subdivided");
  const int g = M.grid_rows;
  for (int k = 0; k < g; ++k) {
    lu_node(M.child(k, k), trunc);
    for (int j = k + 1; j < g; ++j) solve_lower_left(M.child(k, k), M.child(k, j), trunc);
    for (int i = k + 1; i < g; ++i) solve_upper_right(M.child(k, k), M.child(i, k), trunc);
    for (int i = k + 1; i < g; ++i)
      for (int j = k + 1; j < g; ++j) multiply_add(-1.0, M.child(i, k), M.child(k, j), M.child(i, j), trunc);
  }
}

void split_node(const BlockClusterTree& tree, const HNode& W, HNode& L, HNode& U) {
  if (is_diagonal(W)) {
    if (W.is_dense()) {
      const Matrix& M = W.dense();
      Matrix l = M.triangularView<Eigen::StrictlyLower>();
      l.diagonal().setOnes();
      L.data = std::move(l);
      U.data = Matrix(M.triangularView<Eigen::Upper>());
      return;
    }
    for (std::size_t k = 0; k < W.sons().size(); ++k) split_node(tree, W.sons()[k], L.sons()[k], U.sons()[k]);
    return;
  }
  if (W.row_begin > W.col_begin) {
    L = W;
    U = make_zero_node(tree, W.block);
  } else {
    U = W;
    L = make_zero_node(tree, W.block);
  }
}

}  // namespace

void solve_lower_dense(const HNode& L, Eigen::Ref<Matrix> X) {
  if (L.is_dense()) {
    L.dense().triangularView<Eigen::UnitLower>().solveInPlace(X);
    return;
  }
  const int g = L.grid_rows;
  for (int k = 0; k < g; ++k) {
    const HNode& d = L.child(k, k);
    solve_lower_dense(d, X.middleRows(d.row_begin - L.row_begin, d.rows()));
    for (int i = k + 1; i < g; ++i) {
      const HNode& o = L.child(i, k);
      gemm(-1.0, o, false, X.middleRows(o.col_begin - L.col_begin, o.cols()),
           X.middleRows(o.row_begin - L.row_begin, o.rows()));
    }
  }
}

void solve_upper_dense(const HNode& U, Eigen::Ref<Matrix> X) {
  if (U.is_dense()) {
    U.dense().triangularView<Eigen::Upper>().solveInPlace(X);
    return;
  }
  const int g = U.grid_rows;
  for (int k = g - 1; k >= 0; --k) {
    const HNode& d = U.child(k, k);
    solve_upper_dense(d, X.middleRows(d.row_begin - U.row_begin, d.rows()));
    for (int i = 0; i < k; ++i) {
      const HNode& o = U.child(i, k);
      gemm(-1.0, o, false, X.middleRows(o.col_begin - U.col_begin, o.cols()),
           X.middleRows(o.row_begin - U.row_begin, o.rows()));
    }
  }
}

void solve_upper_transposed_dense(const HNode& U, Eigen::Ref<Matrix> X) {
  if (U.is_dense()) {
    U.dense().transpose().triangularView<Eigen::Lower>().solveInPlace(X);
    return;
  }
  const int g = U.grid_rows;
  for (int k = 0; k < g; ++k) {
    const HNode& d = U.child(k, k);
    solve_upper_transposed_dense(d, X.middleRows(d.col_begin - U.col_begin, d.cols()));
    for (int j = k + 1; j < g; ++j) {
      const HNode& o = U.child(k, j);
      gemm(-1.0, o, true, X.middleRows(o.row_begin - U.row_begin, o.rows()),
           X.middleRows(o.col_begin - U.col_begin, o.cols()));
    }
  }
}

void solve_lower_left(const HNode& L, HNode& B, const Truncation& trunc) {
  if (B.is_dense()) {
    solve_lower_dense(L, B.dense());
  } else if (B.is_rk()) {
    if (B.rk().rank() > 0) solve_lower_dense(L, B.rk().U);
  } else if (L.is_dense()) {
    // The row cluster is a leaf, so B is split along its columns only.
    for (auto& s : B.sons()) solve_lower_left(L, s, trunc);
  } else {
    const int g = L.grid_rows;
    for (int j = 0; j < B.grid_cols; ++j)
      for (int k = 0; k < g; ++k) {
        solve_lower_left(L.child(k, k), B.child(k, j), trunc);
        for (int i = k + 1; i < g; ++i) multiply_add(-1.0, L.child(i, k), B.child(k, j), B.child(i, j), trunc);
      }
  }
}

void solve_upper_left(const HNode& U, HNode& B, const Truncation& trunc) {
  if (B.is_dense()) {
    solve_upper_dense(U, B.dense());
  } else if (B.is_rk()) {
    if (B.rk().rank() > 0) solve_upper_dense(U, B.rk().U);
  } else if (U.is_dense()) {
    for (auto& s : B.sons()) solve_upper_left(U, s, trunc);
  } else {
    const int g = U.grid_rows;
    for (int j = 0; j < B.grid_cols; ++j)
      for (int k = g - 1; k >= 0; --k) {
        solve_upper_left(U.child(k, k), B.child(k, j), trunc);
        for (int i = 0; i < k; ++i) multiply_add(-1.0, U.child(i, k), B.child(k, j), B.child(i, j), trunc);
      }
  }
}

void solve_upper_right(const HNode& U, HNode& B, const Truncation& trunc) {
  if (B.is_dense()) {
    Matrix T = B.dense().transpose();
    solve_upper_transposed_dense(U, T);
    B.dense() = T.transpose();
  } else if (B.is_rk()) {
    if (B.rk().rank() > 0) solve_upper_transposed_dense(U, B.rk().V);
  } else if (U.is_dense()) {
    for (auto& s : B.sons()) solve_upper_right(U, s, trunc);
  } else {
    const int g = U.grid_cols;
    for (int i = 0; i < B.grid_rows; ++i)
      for (int k = 0; k < g; ++k) {
        solve_upper_right(U.child(k, k), B.child(i, k), trunc);
        for (int j = k + 1; j < g; ++j) multiply_add(-1.0, B.child(i, k), U.child(k, j), B.child(i, j), trunc);
      }
  }
}

namespace {

// Blocks copied from the input must obey the caps of the output as well.
void recompress(HNode& n, const Truncation& trunc) {
  if (n.is_subdivided()) {
    for (HNode& s : n.sons()) recompress(s, trunc);
  } else if (n.is_rk()) {
    const index_t cap = trunc.caps.for_label(n.label);
    if (n.rk().rank() > cap) n.rk() = truncate(n.rk(), trunc.tol, cap);
  }
}

}  // namespace

LUFactors h_lu(const HMatrix& A, const Truncation& trunc) {
  HMatrix W = A;
  recompress(W.root(), trunc);
  lu_node(W.root(), trunc);
  LUFactors f{HMatrix(A.tree_ptr()), HMatrix(A.tree_ptr())};
  split_node(A.tree(), W.root(), f.L.root(), f.U.root());
  return f;
}

HMatrix h_triangular_solve(const LUFactors& f, const HMatrix& B, Side side, const Truncation& trunc) {
  if (f.L.tree().cluster_ptr() != B.tree().cluster_ptr())
    throw StructureError("h_triangular_solve: factors and right-hand side use different cluster trees");
  if (side == Side::left) {
    HMatrix X = B;
    recompress(X.root(), trunc);
    solve_lower_left(f.L.root(), X.root(), trunc);
    solve_upper_left(f.U.root(), X.root(), trunc);
    return X;
  }
  HMatrix X = transpose(B);
  recompress(X.root(), trunc);
  solve_lower_left(f.L.root(), X.root(), trunc);
  solve_upper_left(f.U.root(), X.root(), trunc);
  return transpose(X);
}

Vector lu_solve(const LUFactors& f, const Vector& b) {
  Matrix x = b;
  solve_lower_dense(f.L.root(), x);
  solve_upper_dense(f.U.root(), x);
  return x.col(0);
}

double spectral_norm_estimate(const LinearOp& apply, const LinearOp& apply_transposed, index_t n, int iterations) {
  if (n <= 0) return 0.0;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (index_t i = 0; i < n; ++i) x[i] = normal(rng);
  x.normalize();
  double estimate = apply(x).norm();
  for (int it = 0; it < iterations; ++it) {
    const Vector z = apply_transposed(apply(x));
    const double nz = z.norm();
    if (nz == 0.0 || !std::isfinite(nz)) break;
    x = z / nz;
    estimate = std::max(estimate, apply(x).norm());
  }
  return estimate;
}

double lu_deviation(const HMatrix& A, const LUFactors& f, int iterations) {
  auto fwd = [&](const Vector& x) -> Vector { return h_matvec(f.L, h_matvec(f.U, x)) - h_matvec(A, x); };
  auto bwd = [&](const Vector& x) -> Vector {
    return h_matvec_transposed(f.U, h_matvec_transposed(f.L, x)) - h_matvec_transposed(A, x);
  };
  return spectral_norm_estimate(fwd, bwd, A.size(), iterations);
}

double h_spectral_norm(const HMatrix& A, int iterations) {
  auto fwd = [&](const Vector& x) -> Vector { return h_matvec(A, x); };
  auto bwd = [&](const Vector& x) -> Vector { return h_matvec_transposed(A, x); };
  return spectral_norm_estimate(fwd, bwd, A.size(), iterations);
}

}  // namespace hcorr
