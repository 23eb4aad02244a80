#include "hcorr/hmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace hcorr {

RankCaps RankCaps::from_factor(index_t k_eta, double c_eta_to_weak) {
  return {k_eta, static_cast<index_t>(std::llround(c_eta_to_weak * static_cast<double>(k_eta)))};
}

index_t RankCaps::for_label(BlockLabel label) const {
  return label == BlockLabel::farfield_weak ? weak : eta;
}

HNode make_zero_node(const BlockClusterTree& tree, int block) {
  const BlockNode& b = tree.node(block);
  const Cluster& s = tree.clusters().node(b.row);
  const Cluster& t = tree.clusters().node(b.col);
  HNode n;
  n.block = block;
  n.row_begin = s.begin;
  n.row_end = s.end;
  n.col_begin = t.begin;
  n.col_end = t.end;
  n.label = b.label;
  switch (b.label) {
    case BlockLabel::nearfield: n.data = Matrix(Matrix::Zero(s.size(), t.size())); break;
    case BlockLabel::farfield_eta:
    case BlockLabel::farfield_weak: n.data = RkMatrix::zero(s.size(), t.size()); break;
    case BlockLabel::subdivided: {
      n.grid_rows = b.grid_rows;
      n.grid_cols = b.grid_cols;
      std::vector<HNode> sons;
      sons.reserve(b.children.size());
      for (int c : b.children) sons.push_back(make_zero_node(tree, c));
      n.data = std::move(sons);
      break;
    }
  }
  return n;
}

HMatrix::HMatrix(std::shared_ptr<const BlockClusterTree> tree) : tree_(std::move(tree)) {
  if (!tree_) throw Error("HMatrix: null block cluster tree");
  root_ = make_zero_node(*tree_, 0);
}

namespace {

template <class Fn>
void for_each_leaf(const HNode& n, Fn&& fn) {
  if (n.is_subdivided())
    for (const auto& s : n.sons()) for_each_leaf(s, fn);
  else
    fn(n);
}

template <class Fn>
void for_each_leaf_mut(HNode& n, Fn&& fn) {
  if (n.is_subdivided())
    for (auto& s : n.sons()) for_each_leaf_mut(s, fn);
  else
    fn(n);
}

void fill_dense(const HNode& n, Eigen::Ref<Matrix> out) {
  if (n.is_dense()) out = n.dense();
  else if (n.is_rk()) out = n.rk().to_dense();
  else
    for (const auto& s : n.sons())
      fill_dense(s, out.block(s.row_begin - n.row_begin, s.col_begin - n.col_begin, s.rows(), s.cols()));
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const auto nthreads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += nthreads) fn(i);
    });
  for (auto& th : pool) th.join();
}

HNode* find_leaf(HNode& n, index_t p, index_t q) {
  HNode* cur = &n;
  while (cur->is_subdivided()) {
    HNode* next = nullptr;
    for (auto& s : cur->sons())
      if (p >= s.row_begin && p < s.row_end && q >= s.col_begin && q < s.col_end) {
        next = &s;
        break;
      }
    cur = next;
  }
  return cur;
}

}  // namespace

Matrix to_dense(const HNode& node) {
  Matrix out(node.rows(), node.cols());
  fill_dense(node, out);
  return out;
}

HMatrix HMatrix::identity(std::shared_ptr<const BlockClusterTree> tree) {
  HMatrix H(std::move(tree));
  for_each_leaf_mut(H.root_, [](HNode& n) {
    if (n.is_dense() && n.row_begin == n.col_begin) n.dense().setIdentity();
  });
  return H;
}

Matrix HMatrix::to_dense() const { return hcorr::to_dense(root_); }

double HMatrix::frobenius_norm() const {
  double s = 0.0;
  for_each_leaf(root_, [&](const HNode& n) {
    if (n.is_dense()) s += n.dense().squaredNorm();
    else {
      const double f = n.rk().frobenius_norm();
      s += f * f;
    }
  });
  return std::sqrt(s);
}

std::size_t HMatrix::bytes() const {
  std::size_t b = 0;
  for_each_leaf(root_, [&](const HNode& n) {
    b += n.is_dense() ? sizeof(double) * static_cast<std::size_t>(n.dense().size()) : n.rk().bytes();
  });
  return b;
}

std::size_t HMatrix::allocated_bytes(const RankCaps& caps) const {
  std::size_t b = 0;
  for_each_leaf(root_, [&](const HNode& n) {
    if (n.is_dense()) b += sizeof(double) * static_cast<std::size_t>(n.rows() * n.cols());
    else {
      const index_t k = std::min({caps.for_label(n.label), n.rows(), n.cols()});
      b += sizeof(double) * static_cast<std::size_t>(k * (n.rows() + n.cols()));
    }
  });
  return b;
}

RankStats HMatrix::rank_stats() const {
  RankStats st;
  double total = 0.0;
  for_each_leaf(root_, [&](const HNode& n) {
    if (!n.is_rk()) return;
    ++st.farfield_leaves;
    total += static_cast<double>(n.rk().rank());
    st.max_rank = std::max(st.max_rank, n.rk().rank());
  });
  st.average_rank = st.farfield_leaves ? total / static_cast<double>(st.farfield_leaves) : 0.0;
  return st;
}

bool HMatrix::respects_caps(const RankCaps& caps) const {
  bool ok = true;
  for_each_leaf(root_, [&](const HNode& n) {
    if (n.is_rk() && n.rk().rank() > caps.for_label(n.label)) ok = false;
  });
  return ok;
}

bool HMatrix::is_finite() const {
  bool ok = true;
  for_each_leaf(root_, [&](const HNode& n) {
    if (n.is_dense()) ok = ok && n.dense().allFinite();
    else ok = ok && n.rk().U.allFinite() && n.rk().V.allFinite();
  });
  return ok;
}

nlohmann::json HMatrix::partition_json() const {
  nlohmann::json leaves = nlohmann::json::array();
  for_each_leaf(root_, [&](const HNode& n) {
    nlohmann::json j{{"rows", {n.row_begin, n.row_end}},
                     {"cols", {n.col_begin, n.col_end}},
                     {"kind", n.is_dense() ? "dense" : to_string(n.label)}};
    if (n.is_dense()) {
      j["rank"] = nullptr;
      j["bytes"] = sizeof(double) * static_cast<std::size_t>(n.dense().size());
    } else {
      j["rank"] = n.rk().rank();
      j["bytes"] = n.rk().bytes();
    }
    leaves.push_back(std::move(j));
  });
  return {{"size", size()}, {"mode", to_string(tree_->mode())}, {"bytes", bytes()}, {"leaves", leaves}};
}

void gemm(double alpha, const HNode& node, bool transposed, const Eigen::Ref<const Matrix>& X,
          Eigen::Ref<Matrix> Y) {
  if (node.is_dense()) {
    if (transposed) Y.noalias() += alpha * node.dense().transpose() * X;
    else Y.noalias() += alpha * node.dense() * X;
  } else if (node.is_rk()) {
    const RkMatrix& R = node.rk();
    if (R.rank() == 0) return;
    if (transposed) Y.noalias() += R.V * (alpha * (R.U.transpose() * X));
    else Y.noalias() += R.U * (alpha * (R.V.transpose() * X));
  } else {
    for (const auto& s : node.sons()) {
      const index_t ro = s.row_begin - node.row_begin, co = s.col_begin - node.col_begin;
      if (transposed) gemm(alpha, s, true, X.middleRows(ro, s.rows()), Y.middleRows(co, s.cols()));
      else gemm(alpha, s, false, X.middleRows(co, s.cols()), Y.middleRows(ro, s.rows()));
    }
  }
}

Vector h_matvec(const HMatrix& H, const Vector& x) {
  if (x.size() != H.size()) throw Error("h_matvec: dimension mismatch");
  Vector y = Vector::Zero(H.size());
  gemm(1.0, H.root(), false, x, y);
  return y;
}

Vector h_matvec_transposed(const HMatrix& H, const Vector& x) {
  if (x.size() != H.size()) throw Error("h_matvec_transposed: dimension mismatch");
  Vector y = Vector::Zero(H.size());
  gemm(1.0, H.root(), true, x, y);
  return y;
}

HMatrix sparse_to_h(const SparseMatrix& S, std::shared_ptr<const BlockClusterTree> tree,
                    const Truncation& trunc) {
  HMatrix H(std::move(tree));
  const auto& ct = H.clusters();
  if (S.rows() != ct.size() || S.cols() != ct.size()) throw StructureError("sparse_to_h: dimension mismatch");
  const auto& iperm = ct.inverse_perm();

  // Nonzeros grouped by the low-rank leaf that receives them.
  std::map<HNode*, std::vector<Triplet>> lowrank;
  for (index_t r = 0; r < S.rows(); ++r) {
    auto cols = S.row_cols(r);
    auto vals = S.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const index_t p = iperm[r], q = iperm[cols[k]];
      HNode* leaf = find_leaf(H.root(), p, q);
      if (leaf->is_dense()) {
        leaf->dense()(p - leaf->row_begin, q - leaf->col_begin) = vals[k];
      } else if (leaf->label == BlockLabel::farfield_eta) {
        throw StructureError("sparse_to_h: nonzero entry (" + std::to_string(r) + ", " +
                             std::to_string(cols[k]) + ") falls into an eta-admissible farfield block");
      } else {
        lowrank[leaf].push_back({p - leaf->row_begin, q - leaf->col_begin, vals[k]});
      }
    }
  }
  for (auto& [leaf, entries] : lowrank) {
    std::vector<index_t> rows;
    for (const auto& t : entries) rows.push_back(t.row);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    const auto k = static_cast<index_t>(rows.size());
    Matrix U = Matrix::Zero(leaf->rows(), k), V = Matrix::Zero(leaf->cols(), k);
    for (index_t l = 0; l < k; ++l) U(rows[l], l) = 1.0;
    for (const auto& t : entries) {
      const auto l = static_cast<index_t>(std::lower_bound(rows.begin(), rows.end(), t.row) - rows.begin());
      V(t.col, l) = t.value;
    }
    leaf->rk() = truncate(RkMatrix(std::move(U), std::move(V)), trunc.tol, trunc.caps.for_label(leaf->label));
  }
  return H;
}

HMatrix kernel_to_h(const EntryFn& entry, std::shared_ptr<const BlockClusterTree> tree,
                    const Truncation& trunc, int workers, KernelAssemblyStats* stats) {
  HMatrix H(std::move(tree));
  const auto& perm = H.clusters().perm();
  std::vector<HNode*> leaves;
  for_each_leaf_mut(H.root(), [&](HNode& n) { leaves.push_back(&n); });
  std::vector<char> stagnated(leaves.size(), 0);
  std::vector<index_t> evaluated(leaves.size(), 0);

  parallel_for(leaves.size(), workers, [&](std::size_t k) {
    HNode& n = *leaves[k];
    const index_t r0 = n.row_begin, c0 = n.col_begin;
    if (n.is_dense()) {
      Matrix& M = n.dense();
      for (index_t j = 0; j < n.cols(); ++j)
        for (index_t i = 0; i < n.rows(); ++i) M(i, j) = entry(perm[r0 + i], perm[c0 + j]);
      evaluated[k] = M.size();
    } else {
      const index_t cap = trunc.caps.for_label(n.label);
      auto res = aca([&](index_t i, index_t j) { return entry(perm[r0 + i], perm[c0 + j]); }, n.rows(),
                     n.cols(), trunc.tol, cap);
      n.rk() = truncate(res.approx, trunc.tol, cap);
      stagnated[k] = res.stagnated;
      evaluated[k] = res.entries_evaluated;
    }
  });

  if (stats) {
    *stats = {};
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      if (leaves[k]->is_rk()) ++stats->aca_blocks;
      stats->stagnated_blocks += stagnated[k];
      stats->entries_evaluated += evaluated[k];
    }
  }
  return H;
}

}  // namespace hcorr
