#pragma once

#include "hcorr/mesh.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace hcorr {

/// Node of a binary geometric cluster tree. The index set is the contiguous
/// range [begin, end) of the tree's permutation.
struct Cluster {
  index_t begin = 0;
  index_t end = 0;
  BoundingBox box;      ///< box of the interpolation points
  BoundingBox support;  ///< box of the union of basis supports
  int level = 0;
  std::array<int, 2> sons{-1, -1};

  index_t size() const { return end - begin; }
  bool is_leaf() const { return sons[0] < 0; }
  double support_diameter() const { return support.diameter(); }
};

class ClusterTree {
 public:
  int dim() const { return dim_; }
  index_t size() const { return static_cast<index_t>(perm_.size()); }
  index_t n_min() const { return n_min_; }
  const Cluster& root() const { return nodes_.front(); }
  const Cluster& node(int id) const { return nodes_[id]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int depth() const;
  std::vector<int> leaves() const;

  /// perm()[k] is the original index stored at permuted position k.
  const std::vector<index_t>& perm() const { return perm_; }
  /// inverse_perm()[i] is the permuted position of original index i.
  const std::vector<index_t>& inverse_perm() const { return iperm_; }

  Vector to_permuted(const Vector& original) const;
  Vector to_original(const Vector& permuted) const;
  Matrix to_original(const Matrix& permuted) const;
  Matrix to_permuted(const Matrix& original) const;

 private:
  friend ClusterTree build_cluster_tree(std::span<const Point>, int, index_t,
                                        std::span<const BoundingBox>);
  int dim_ = 0;
  index_t n_min_ = 1;
  std::vector<Cluster> nodes_;
  std::vector<index_t> perm_;
  std::vector<index_t> iperm_;
};

/// Recursive bisection of the longest bounding-box edge at its midpoint (lowest
/// axis index on ties, median split if a half would be empty) until a cluster
/// holds at most n_min indices. Support boxes default to the point boxes.
ClusterTree build_cluster_tree(std::span<const Point> points, int dim, index_t n_min,
                               std::span<const BoundingBox> supports = {});

/// max(diam a, diam b) <= eta * dist(a, b), with dist(a, b) > 0.
bool is_eta_admissible(const BoundingBox& a, const BoundingBox& b, double eta);
bool is_eta_admissible(const Cluster& s, const Cluster& t, double eta);

/// Number of axes i where a_i^s < mid_i(t) < b_i^s or a_i^t < mid_i(s) < b_i^t.
int midpoint_overlap_axes(const BoundingBox& s, const BoundingBox& t);

/// Mixed weak criterion: s != t, min(#s, #t) < weak_threshold and the
/// midpoint condition holds in at most one axis.
bool is_weakly_admissible(const Cluster& s, const Cluster& t, index_t weak_threshold);

enum class AdmissibilityMode { all_eta, weak };
enum class BlockLabel { farfield_eta, farfield_weak, nearfield, subdivided };

const char* to_string(BlockLabel label);
const char* to_string(AdmissibilityMode mode);
AdmissibilityMode parse_admissibility_mode(std::string_view name);

struct BlockNode {
  int row = 0;  ///< row cluster id
  int col = 0;  ///< column cluster id
  BlockLabel label = BlockLabel::nearfield;
  int grid_rows = 0;  ///< 1 or 2 when subdivided
  int grid_cols = 0;
  std::vector<int> children;  ///< row-major grid of block ids

  bool is_leaf() const { return label != BlockLabel::subdivided; }
  int child(int i, int j) const { return children[static_cast<std::size_t>(i * grid_cols + j)]; }
};

/// Partition of the index square into farfield and nearfield blocks.
class BlockClusterTree {
 public:
  BlockClusterTree(std::shared_ptr<const ClusterTree> tree, AdmissibilityMode mode, double eta,
                   index_t weak_threshold);

  const ClusterTree& clusters() const { return *tree_; }
  const std::shared_ptr<const ClusterTree>& cluster_ptr() const { return tree_; }
  AdmissibilityMode mode() const { return mode_; }
  double eta() const { return eta_; }
  index_t weak_threshold() const { return weak_threshold_; }

  const BlockNode& root() const { return nodes_.front(); }
  const BlockNode& node(int id) const { return nodes_[id]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  std::vector<int> leaves() const;
  /// Largest number of blocks (inner nodes and leaves) that share one row cluster.
  int max_blocks_per_row() const;

  nlohmann::json to_json() const;

 private:
  int build(int row, int col);

  std::shared_ptr<const ClusterTree> tree_;
  AdmissibilityMode mode_;
  double eta_;
  index_t weak_threshold_;
  std::vector<BlockNode> nodes_;
};

}  // namespace hcorr
