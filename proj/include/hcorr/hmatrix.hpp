#pragma once

#include "hcorr/cluster.hpp"
#include "hcorr/lowrank.hpp"
#include "hcorr/sparse.hpp"

#include <json.hpp>

#include <memory>
#include <variant>
#include <vector>

namespace hcorr {

/// Rank limits for farfield leaves: k_eta for eta-admissible blocks and
/// k_w = c_{eta->w} * k_eta for weakly admissible ones.
struct RankCaps {
  index_t eta = 20;
  index_t weak = 60;

  static RankCaps from_factor(index_t k_eta, double c_eta_to_weak);
  index_t for_label(BlockLabel label) const;
};

/// Accuracy of the approximate arithmetic: relative singular-value threshold
/// plus the rank caps.
struct Truncation {
  double tol = 1e-8;
  RankCaps caps;
};

/// One block of an H-matrix. Leaves hold a dense matrix (nearfield) or an
/// RkMatrix (farfield); inner nodes hold a row-major grid of sons.
struct HNode {
  int block = 0;
  index_t row_begin = 0, row_end = 0;
  index_t col_begin = 0, col_end = 0;
  BlockLabel label = BlockLabel::nearfield;
  int grid_rows = 0, grid_cols = 0;
  std::variant<Matrix, RkMatrix, std::vector<HNode>> data;

  index_t rows() const { return row_end - row_begin; }
  index_t cols() const { return col_end - col_begin; }
  bool is_dense() const { return std::holds_alternative<Matrix>(data); }
  bool is_rk() const { return std::holds_alternative<RkMatrix>(data); }
  bool is_subdivided() const { return std::holds_alternative<std::vector<HNode>>(data); }

  Matrix& dense() { return std::get<Matrix>(data); }
  const Matrix& dense() const { return std::get<Matrix>(data); }
  RkMatrix& rk() { return std::get<RkMatrix>(data); }
  const RkMatrix& rk() const { return std::get<RkMatrix>(data); }
  HNode& child(int i, int j) { return std::get<std::vector<HNode>>(data)[static_cast<std::size_t>(i * grid_cols + j)]; }
  const HNode& child(int i, int j) const {
    return std::get<std::vector<HNode>>(data)[static_cast<std::size_t>(i * grid_cols + j)];
  }
  std::vector<HNode>& sons() { return std::get<std::vector<HNode>>(data); }
  const std::vector<HNode>& sons() const { return std::get<std::vector<HNode>>(data); }
};

struct RankStats {
  index_t farfield_leaves = 0;
  double average_rank = 0.0;
  index_t max_rank = 0;
};

/// Square H-matrix over a block cluster tree, in the permuted index ordering of
/// the tree's cluster tree.
class HMatrix {
 public:
  /// Zero matrix with the leaf structure of the tree.
  explicit HMatrix(std::shared_ptr<const BlockClusterTree> tree);
  static HMatrix identity(std::shared_ptr<const BlockClusterTree> tree);

  const BlockClusterTree& tree() const { return *tree_; }
  const std::shared_ptr<const BlockClusterTree>& tree_ptr() const { return tree_; }
  const ClusterTree& clusters() const { return tree_->clusters(); }
  index_t size() const { return root_.rows(); }

  HNode& root() { return root_; }
  const HNode& root() const { return root_; }

  Matrix to_dense() const;
  double frobenius_norm() const;
  /// Bytes of the stored factors.
  std::size_t bytes() const;
  /// Worst-case bytes with every farfield leaf at min(cap, rows, cols).
  std::size_t allocated_bytes(const RankCaps& caps) const;
  RankStats rank_stats() const;
  /// True if every farfield leaf rank is within its cap.
  bool respects_caps(const RankCaps& caps) const;
  bool is_finite() const;
  /// Per-leaf {rows, cols, kind, rank, bytes}.
  nlohmann::json partition_json() const;

 private:
  std::shared_ptr<const BlockClusterTree> tree_;
  HNode root_;
};

HNode make_zero_node(const BlockClusterTree& tree, int block);
Matrix to_dense(const HNode& node);

/// Exact insertion of a sparse matrix (original ordering). Nonzeros inside
/// farfield_eta leaves are a structural error; farfield_weak leaves receive the
/// low-rank product of row selectors and sparse rows, truncated to the cap.
HMatrix sparse_to_h(const SparseMatrix& S, std::shared_ptr<const BlockClusterTree> tree,
                    const Truncation& trunc = {});

struct KernelAssemblyStats {
  index_t aca_blocks = 0;
  index_t stagnated_blocks = 0;
  index_t entries_evaluated = 0;
};

/// Nearfield leaves by dense evaluation, farfield leaves by ACA followed by
/// recompression. The generator takes original indices.
HMatrix kernel_to_h(const EntryFn& entry, std::shared_ptr<const BlockClusterTree> tree,
                    const Truncation& trunc, int workers = 1, KernelAssemblyStats* stats = nullptr);

/// y = H x in the permuted ordering.
Vector h_matvec(const HMatrix& H, const Vector& x);
Vector h_matvec_transposed(const HMatrix& H, const Vector& x);

/// Y += alpha * op(node) * X with op = identity or transpose.
void gemm(double alpha, const HNode& node, bool transposed, const Eigen::Ref<const Matrix>& X,
          Eigen::Ref<Matrix> Y);

/// Leafwise sum on identical trees; throws StructureError otherwise.
HMatrix h_add(const HMatrix& A, const HMatrix& B, const Truncation& trunc);
HMatrix h_scale(const HMatrix& A, double alpha);
/// C += alpha * S, where S may live on a different block tree over the same clusters.
void add_into(double alpha, const HMatrix& S, HMatrix& C, const Truncation& trunc);
/// Re-expresses H on another block tree over the same cluster tree.
HMatrix convert_to(const HMatrix& H, std::shared_ptr<const BlockClusterTree> target,
                   const Truncation& trunc);
/// Transpose on the (symmetric) block tree of H.
HMatrix transpose(const HMatrix& H);

/// C += alpha * A * B with recompression after every update. The three block
/// trees may differ but must share one cluster tree.
void multiply_add(double alpha, const HMatrix& A, const HMatrix& B, HMatrix& C, const Truncation& trunc);
void multiply_add(double alpha, const HNode& A, const HNode& B, HNode& C, const Truncation& trunc);
/// A * B on the block tree of A.
HMatrix h_multiply(const HMatrix& A, const HMatrix& B, const Truncation& trunc);

// Block-level helpers shared by the arithmetic.
void add_rk(double alpha, const RkMatrix& R, HNode& C, const Truncation& trunc);
RkMatrix to_rk(const HNode& node, const Truncation& trunc, index_t cap);

}  // namespace hcorr
