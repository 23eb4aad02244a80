#include "hcorr/hmatrix.hpp"

#include <algorithm>

namespace hcorr {

namespace {

bool same_structure(const HNode& a, const HNode& b) {
  if (a.row_begin != b.row_begin || a.row_end != b.row_end || a.col_begin != b.col_begin ||
      a.col_end != b.col_end || a.label != b.label || a.data.index() != b.data.index())
    return false;
  if (!a.is_subdivided()) return true;
  const auto& sa = a.sons();
  const auto& sb = b.sons();
  if (sa.size() != sb.size()) return false;
  for (std::size_t k = 0; k < sa.size(); ++k)
    if (!same_structure(sa[k], sb[k])) return false;
  return true;
}

void require_same_clusters(const HMatrix& a, const HMatrix& b, const char* op) {
  if (a.tree().cluster_ptr() != b.tree().cluster_ptr())
    throw StructureError(std::string(op) + ": operands are built on different cluster trees");
}

HNode dense_slice(const HNode& n, index_t rb, index_t re, index_t cb, index_t ce) {
  HNode out;
  out.row_begin = rb;
  out.row_end = re;
  out.col_begin = cb;
  out.col_end = ce;
  out.data = Matrix(n.dense().block(rb - n.row_begin, cb - n.col_begin, re - rb, ce - cb));
  return out;
}

RkMatrix concat(const RkMatrix& a, double alpha, const RkMatrix& b) {
  Matrix U(a.rows(), a.rank() + b.rank()), V(a.cols(), a.rank() + b.rank());
  U << a.U, alpha * b.U;
  V << a.V, b.V;
  return RkMatrix(std::move(U), std::move(V));
}

// Low-rank representation of A * B for nodes over (s, t) and (t, r).
RkMatrix product_rk(const HNode& A, const HNode& B, const Truncation& trunc, index_t cap) {
  if (A.is_rk()) {
    const RkMatrix& R = A.rk();
    Matrix W = Matrix::Zero(B.cols(), R.rank());
    if (R.rank() > 0) gemm(1.0, B, true, R.V, W);
    return RkMatrix(R.U, std::move(W));
  }
  if (B.is_rk()) {
    const RkMatrix& R = B.rk();
    Matrix W = Matrix::Zero(A.rows(), R.rank());
    if (R.rank() > 0) gemm(1.0, A, false, R.U, W);
    return RkMatrix(std::move(W), R.V);
  }
  if (A.is_dense()) return truncate(RkMatrix(A.dense(), to_dense(B).transpose()), trunc.tol, cap);
  if (B.is_dense()) return truncate(RkMatrix(to_dense(A), B.dense().transpose()), trunc.tol, cap);

  // Both subdivided: agglomerate the products of the son blocks.
  std::vector<RkMatrix> parts;
  index_t total = 0;
  for (int i = 0; i < A.grid_rows; ++i)
    for (int j = 0; j < B.grid_cols; ++j) {
      RkMatrix acc;
      for (int k = 0; k < A.grid_cols; ++k) {
        RkMatrix p = product_rk(A.child(i, k), B.child(k, j), trunc, cap);
        acc = k == 0 ? std::move(p) : truncate(concat(acc, 1.0, p), trunc.tol, cap);
      }
      total += acc.rank();
      parts.push_back(std::move(acc));
    }
  Matrix U = Matrix::Zero(A.rows(), total), V = Matrix::Zero(B.cols(), total);
  index_t off = 0;
  std::size_t p = 0;
  for (int i = 0; i < A.grid_rows; ++i)
    for (int j = 0; j < B.grid_cols; ++j, ++p) {
      const HNode& ai = A.child(i, 0);
      const HNode& bj = B.child(0, j);
      const index_t k = parts[p].rank();
      U.block(ai.row_begin - A.row_begin, off, ai.rows(), k) = parts[p].U;
      V.block(bj.col_begin - B.col_begin, off, bj.cols(), k) = parts[p].V;
      off += k;
    }
  return truncate(RkMatrix(std::move(U), std::move(V)), trunc.tol, cap);
}

void add_node(double alpha, const HNode& S, HNode& C, const Truncation& trunc) {
  if (S.is_rk()) {
    add_rk(alpha, S.rk(), C, trunc);
  } else if (S.is_dense()) {
    if (C.is_dense()) C.dense() += alpha * S.dense();
    else if (C.is_rk()) add_rk(alpha, compress_dense(S.dense(), trunc.tol, S.rows()), C, trunc);
    else
      for (auto& c : C.sons())
        add_node(alpha, dense_slice(S, c.row_begin, c.row_end, c.col_begin, c.col_end), c, trunc);
  } else if (C.is_subdivided()) {
    if (C.grid_rows != S.grid_rows || C.grid_cols != S.grid_cols)
      throw StructureError("add_into: inconsistent block grids");
    for (int i = 0; i < C.grid_rows; ++i)
      for (int j = 0; j < C.grid_cols; ++j) add_node(alpha, S.child(i, j), C.child(i, j), trunc);
  } else if (C.is_dense()) {
    C.dense() += alpha * to_dense(S);
  } else {
    add_rk(alpha, to_rk(S, trunc, trunc.caps.for_label(C.label)), C, trunc);
  }
}

void scale_node(HNode& n, double alpha) {
  if (n.is_dense()) n.dense() *= alpha;
  else if (n.is_rk()) n.rk().U *= alpha;
  else
    for (auto& s : n.sons()) scale_node(s, alpha);
}

void transpose_node(const BlockClusterTree& tree, int block, const HNode& src, HNode& dst) {
  const BlockNode& b = tree.node(block);
  if (b.label != src.label) throw StructureError("transpose: block tree is not symmetric");
  if (src.is_dense()) dst.data = Matrix(src.dense().transpose());
  else if (src.is_rk()) dst.data = RkMatrix(src.rk().V, src.rk().U);
  else
    for (int i = 0; i < b.grid_rows; ++i)
      for (int j = 0; j < b.grid_cols; ++j) transpose_node(tree, b.child(i, j), src.child(j, i), dst.child(i, j));
}

}  // namespace

void add_rk(double alpha, const RkMatrix& R, HNode& C, const Truncation& trunc) {
  if (R.rank() == 0 || alpha == 0.0) return;
  if (C.is_dense()) {
    C.dense().noalias() += (alpha * R.U) * R.V.transpose();
  } else if (C.is_rk()) {
    C.rk() = truncate(concat(C.rk(), alpha, R), trunc.tol, trunc.caps.for_label(C.label));
  } else {
    for (auto& s : C.sons()) {
      RkMatrix part(R.U.middleRows(s.row_begin - C.row_begin, s.rows()),
                    R.V.middleRows(s.col_begin - C.col_begin, s.cols()));
      add_rk(alpha, part, s, trunc);
    }
  }
}

RkMatrix to_rk(const HNode& node, const Truncation& trunc, index_t cap) {
  if (node.is_rk()) return truncate(node.rk(), trunc.tol, cap);
  if (node.is_dense()) return compress_dense(node.dense(), trunc.tol, cap);
  index_t total = 0;
  std::vector<RkMatrix> parts;
  for (const auto& s : node.sons()) {
    parts.push_back(to_rk(s, trunc, cap));
    total += parts.back().rank();
  }
  Matrix U = Matrix::Zero(node.rows(), total), V = Matrix::Zero(node.cols(), total);
  index_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const HNode& s = node.sons()[k];
    const index_t r = parts[k].rank();
    U.block(s.row_begin - node.row_begin, off, s.rows(), r) = parts[k].U;
    V.block(s.col_begin - node.col_begin, off, s.cols(), r) = parts[k].V;
    off += r;
  }
  return truncate(RkMatrix(std::move(U), std::move(V)), trunc.tol, cap);
}

HMatrix h_add(const HMatrix& A, const HMatrix& B, const Truncation& trunc) {
  if (A.tree_ptr() != B.tree_ptr() && !same_structure(A.root(), B.root()))
    throw StructureError("h_add: block cluster trees differ");
  HMatrix C = A;
  add_into(1.0, B, C, trunc);
  return C;
}

HMatrix h_scale(const HMatrix& A, double alpha) {
  HMatrix C = A;
  scale_node(C.root(), alpha);
  return C;
}

void add_into(double alpha, const HMatrix& S, HMatrix& C, const Truncation& trunc) {
  require_same_clusters(S, C, "add_into");
  add_node(alpha, S.root(), C.root(), trunc);
}

HMatrix convert_to(const HMatrix& H, std::shared_ptr<const BlockClusterTree> target, const Truncation& trunc) {
  HMatrix C(std::move(target));
  add_into(1.0, H, C, trunc);
  return C;
}

HMatrix transpose(const HMatrix& H) {
  HMatrix T(H.tree_ptr());
  transpose_node(H.tree(), 0, H.root(), T.root());
  return T;
}

void multiply_add(double alpha, const HNode& A, const HNode& B, HNode& C, const Truncation& trunc) {
  if (alpha == 0.0) return;
  if (A.is_rk() || B.is_rk()) {
    if ((A.is_rk() && A.rk().rank() == 0) || (B.is_rk() && B.rk().rank() == 0)) return;
    add_rk(alpha, product_rk(A, B, trunc, trunc.caps.for_label(C.label)), C, trunc);
  } else if (C.is_dense()) {
    gemm(alpha, A, false, to_dense(B), C.dense());
  } else if (C.is_rk()) {
    add_rk(alpha, product_rk(A, B, trunc, trunc.caps.for_label(C.label)), C, trunc);
  } else {
    // C is subdivided; dense operands are sliced along the grid of C and the
    // inner splitting of the other operand.
    std::vector<std::pair<index_t, index_t>> inner;
    if (A.is_subdivided())
      for (int k = 0; k < A.grid_cols; ++k) inner.emplace_back(A.child(0, k).col_begin, A.child(0, k).col_end);
    else if (B.is_subdivided())
      for (int k = 0; k < B.grid_rows; ++k) inner.emplace_back(B.child(k, 0).row_begin, B.child(k, 0).row_end);
    else
      inner.emplace_back(A.col_begin, A.col_end);
    for (int i = 0; i < C.grid_rows; ++i)
      for (int j = 0; j < C.grid_cols; ++j) {
        HNode& c = C.child(i, j);
        for (int k = 0; k < static_cast<int>(inner.size()); ++k) {
          const auto [kb, ke] = inner[static_cast<std::size_t>(k)];
          if (A.is_subdivided() && B.is_subdivided()) {
            multiply_add(alpha, A.child(i, k), B.child(k, j), c, trunc);
          } else if (A.is_subdivided()) {
            multiply_add(alpha, A.child(i, k), dense_slice(B, kb, ke, c.col_begin, c.col_end), c, trunc);
          } else if (B.is_subdivided()) {
            multiply_add(alpha, dense_slice(A, c.row_begin, c.row_end, kb, ke), B.child(k, j), c, trunc);
          } else {
            multiply_add(alpha, dense_slice(A, c.row_begin, c.row_end, kb, ke),
                         dense_slice(B, kb, ke, c.col_begin, c.col_end), c, trunc);
          }
        }
      }
  }
}

void multiply_add(double alpha, const HMatrix& A, const HMatrix& B, HMatrix& C, const Truncation& trunc) {
  require_same_clusters(A, B, "multiply_add");
  require_same_clusters(A, C, "multiply_add");
  multiply_add(alpha, A.root(), B.root(), C.root(), trunc);
}

HMatrix h_multiply(const HMatrix& A, const HMatrix& B, const Truncation& trunc) {
  HMatrix C(A.tree_ptr());
  multiply_add(1.0, A, B, C, trunc);
  return C;
}

}  // namespace hcorr
