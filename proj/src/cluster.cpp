#include "hcorr/cluster.hpp"

#include <algorithm>
#include <numeric>

namespace hcorr {

int ClusterTree::depth() const {
  int d = 0;
  for (const auto& c : nodes_) d = std::max(d, c.level);
  return d;
}

std::vector<int> ClusterTree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(i);
  return out;
}

Vector ClusterTree::to_permuted(const Vector& original) const {
  Vector p(original.size());
  for (index_t k = 0; k < size(); ++k) p[k] = original[perm_[k]];
  return p;
}

Vector ClusterTree::to_original(const Vector& permuted) const {
  Vector o(permuted.size());
  for (index_t k = 0; k < size(); ++k) o[perm_[k]] = permuted[k];
  return o;
}

Matrix ClusterTree::to_original(const Matrix& permuted) const {
  Matrix o(permuted.rows(), permuted.cols());
  for (index_t j = 0; j < size(); ++j)
    for (index_t i = 0; i < size(); ++i) o(perm_[i], perm_[j]) = permuted(i, j);
  return o;
}

Matrix ClusterTree::to_permuted(const Matrix& original) const {
  Matrix p(original.rows(), original.cols());
  for (index_t j = 0; j < size(); ++j)
    for (index_t i = 0; i < size(); ++i) p(i, j) = original(perm_[i], perm_[j]);
  return p;
}

ClusterTree build_cluster_tree(std::span<const Point> points, int dim, index_t n_min,
                               std::span<const BoundingBox> supports) {
  if (points.empty()) throw Error("build_cluster_tree: empty point set");
  if (n_min < 1) throw Error("build_cluster_tree: n_min must be at least 1");
  if (dim < 1 || dim > max_dim) throw Error("build_cluster_tree: unsupported dimension");
  if (!supports.empty() && supports.size() != points.size())
    throw Error("build_cluster_tree: support box count mismatch");

  ClusterTree tree;
  tree.dim_ = dim;
  tree.n_min_ = n_min;
  const auto n = static_cast<index_t>(points.size());
  tree.perm_.resize(static_cast<std::size_t>(n));
  std::iota(tree.perm_.begin(), tree.perm_.end(), index_t{0});

  auto make = [&](index_t begin, index_t end, int level) {
    Cluster c;
    c.begin = begin;
    c.end = end;
    c.level = level;
    c.box = BoundingBox::empty(dim);
    c.support = BoundingBox::empty(dim);
    for (index_t k = begin; k < end; ++k) {
      const index_t i = tree.perm_[k];
      c.box.extend(points[i]);
      if (supports.empty()) c.support.extend(points[i]);
      else c.support.extend(supports[i]);
    }
    return c;
  };

  tree.nodes_.push_back(make(0, n, 0));
  // Breadth-first so node ids grow with the level.
  for (std::size_t id = 0; id < tree.nodes_.size(); ++id) {
    const Cluster c = tree.nodes_[id];
    if (c.size() <= n_min) continue;
    int axis = 0;
    for (int k = 1; k < dim; ++k)
      if (c.box.edge(k) > c.box.edge(axis)) axis = k;
    auto first = tree.perm_.begin() + c.begin;
    auto last = tree.perm_.begin() + c.end;
    const double mid = 0.5 * (c.box.lo[axis] + c.box.hi[axis]);
    auto cut = std::stable_partition(first, last, [&](index_t i) { return points[i][axis] < mid; });
    if (cut == first || cut == last) {
      std::stable_sort(first, last, [&](index_t a, index_t b) { return points[a][axis] < points[b][axis]; });
      cut = first + c.size() / 2;
    }
    const index_t split = c.begin + (cut - first);
    const int s0 = static_cast<int>(tree.nodes_.size());
    tree.nodes_.push_back(make(c.begin, split, c.level + 1));
    tree.nodes_.push_back(make(split, c.end, c.level + 1));
    tree.nodes_[id].sons = {s0, s0 + 1};
  }

  tree.iperm_.resize(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) tree.iperm_[tree.perm_[k]] = k;
  return tree;
}

bool is_eta_admissible(const BoundingBox& a, const BoundingBox& b, double eta) {
  const double dist = a.distance(b);
  if (!(dist > 0.0)) return false;
  return std::max(a.diameter(), b.diameter()) <= eta * dist;
}

bool is_eta_admissible(const Cluster& s, const Cluster& t, double eta) {
  return is_eta_admissible(s.support, t.support, eta);
}

int midpoint_overlap_axes(const BoundingBox& s, const BoundingBox& t) {
  int count = 0;
  for (int i = 0; i < s.dim; ++i) {
    const double mid_t = 0.5 * (t.lo[i] + t.hi[i]);
    const double mid_s = 0.5 * (s.lo[i] + s.hi[i]);
    if ((s.lo[i] < mid_t && mid_t < s.hi[i]) || (t.lo[i] < mid_s && mid_s < t.hi[i])) ++count;
  }
  return count;
}

bool is_weakly_admissible(const Cluster& s, const Cluster& t, index_t weak_threshold) {
  if (s.begin == t.begin && s.end == t.end) return false;
  if (std::min(s.size(), t.size()) >= weak_threshold) return false;
  return midpoint_overlap_axes(s.support, t.support) <= 1;
}

const char* to_string(BlockLabel label) {
  switch (label) {
    case BlockLabel::farfield_eta: return "farfield_eta";
    case BlockLabel::farfield_weak: return "farfield_weak";
    case BlockLabel::nearfield: return "nearfield";
    case BlockLabel::subdivided: return "subdivided";
  }
  return "?";
}

const char* to_string(AdmissibilityMode mode) {
  return mode == AdmissibilityMode::all_eta ? "all_eta" : "weak";
}

AdmissibilityMode parse_admissibility_mode(std::string_view name) {
  if (name == "all_eta") return AdmissibilityMode::all_eta;
  if (name == "weak") return AdmissibilityMode::weak;
  throw Error("unknown admissibility mode '" + std::string(name) + "'");
}

BlockClusterTree::BlockClusterTree(std::shared_ptr<const ClusterTree> tree, AdmissibilityMode mode,
                                   double eta, index_t weak_threshold)
    : tree_(std::move(tree)), mode_(mode), eta_(eta), weak_threshold_(weak_threshold) {
  if (!tree_) throw Error("BlockClusterTree: null cluster tree");
  if (!(eta_ > 0.0)) throw Error("BlockClusterTree: eta must be positive");
  build(0, 0);
}

int BlockClusterTree::build(int row, int col) {
  const int id = static_cast<int>(nodes_.size());
  BlockNode fresh;
  fresh.row = row;
  fresh.col = col;
  nodes_.push_back(std::move(fresh));
  const Cluster& s = tree_->node(row);
  const Cluster& t = tree_->node(col);
  BlockLabel label;
  if (mode_ == AdmissibilityMode::weak && is_weakly_admissible(s, t, weak_threshold_))
    label = BlockLabel::farfield_weak;
  else if (is_eta_admissible(s, t, eta_))
    label = BlockLabel::farfield_eta;
  else if (s.is_leaf() && t.is_leaf())
    label = BlockLabel::nearfield;
  else
    label = BlockLabel::subdivided;
  nodes_[id].label = label;
  if (label != BlockLabel::subdivided) return id;

  std::vector<int> rows = s.is_leaf() ? std::vector<int>{row} : std::vector<int>{s.sons[0], s.sons[1]};
  std::vector<int> cols = t.is_leaf() ? std::vector<int>{col} : std::vector<int>{t.sons[0], t.sons[1]};
  std::vector<int> kids;
  for (int r : rows)
    for (int c : cols) kids.push_back(build(r, c));
  BlockNode& node = nodes_[id];
  node.grid_rows = static_cast<int>(rows.size());
  node.grid_cols = static_cast<int>(cols.size());
  node.children = std::move(kids);
  return id;
}

std::vector<int> BlockClusterTree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(i);
  return out;
}

int BlockClusterTree::max_blocks_per_row() const {
  std::vector<int> count(static_cast<std::size_t>(tree_->num_nodes()), 0);
  for (const auto& b : nodes_) ++count[b.row];
  return *std::max_element(count.begin(), count.end());
}

nlohmann::json BlockClusterTree::to_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (int id : leaves()) {
    const auto& b = nodes_[id];
    const auto& s = tree_->node(b.row);
    const auto& t = tree_->node(b.col);
    blocks.push_back({{"rows", {s.begin, s.end}}, {"cols", {t.begin, t.end}}, {"label", to_string(b.label)}});
  }
  return {{"size", tree_->size()},
          {"mode", to_string(mode_)},
          {"eta", eta_},
          {"weak_threshold", weak_threshold_},
          {"n_min", tree_->n_min()},
          {"cluster_depth", tree_->depth()},
          {"blocks", blocks}};
}

}  // namespace hcorr
