#include "hcorr/cluster.hpp"
#include "hcorr/mesh.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace hcorr;
using testing::make_blocks;
using testing::make_clusters;

namespace {

BoundingBox box1d(double a, double b) {
  BoundingBox x = BoundingBox::empty(1);
  x.extend(Point{a, 0, 0});
  x.extend(Point{b, 0, 0});
  return x;
}

Cluster cluster(index_t begin, index_t end, const BoundingBox& box) {
  Cluster c;
  c.begin = begin;
  c.end = end;
  c.box = box;
  c.support = box;
  return c;
}

void check_cluster_invariants(const ClusterTree& t, std::span<const Point> pts) {
  for (int id = 0; id < t.num_nodes(); ++id) {
    const Cluster& c = t.node(id);
    CHECK(c.is_leaf() == (c.size() <= t.n_min()));
    for (index_t k = c.begin; k < c.end; ++k) CHECK(c.box.contains(pts[t.perm()[k]], 1e-14));
    if (!c.is_leaf()) {
      const Cluster& a = t.node(c.sons[0]);
      const Cluster& b = t.node(c.sons[1]);
      CHECK(a.begin == c.begin);
      CHECK(a.end == b.begin);
      CHECK(b.end == c.end);
      CHECK(a.size() > 0);
      CHECK(b.size() > 0);
      CHECK(a.level == c.level + 1);
    }
  }
  std::vector<int> seen(pts.size(), 0);
  for (index_t p : t.perm()) ++seen[p];
  for (int s : seen) CHECK(s == 1);
  for (index_t i = 0; i < t.size(); ++i) CHECK(t.perm()[t.inverse_perm()[i]] == i);
}

// Every (i, j) pair covered by exactly one leaf.
bool tiles_exactly(const BlockClusterTree& bt) {
  const index_t n = bt.clusters().size();
  std::vector<unsigned char> hit(static_cast<std::size_t>(n * n), 0);
  for (int id : bt.leaves()) {
    const BlockNode& b = bt.node(id);
    const Cluster& s = bt.clusters().node(b.row);
    const Cluster& t = bt.clusters().node(b.col);
    for (index_t i = s.begin; i < s.end; ++i)
      for (index_t j = t.begin; j < t.end; ++j)
        if (hit[static_cast<std::size_t>(i * n + j)]++) return false;
  }
  for (unsigned char h : hit)
    if (h != 1) return false;
  return true;
}

}  // namespace

TEST_CASE("eight points on a line") {
  std::vector<Point> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({i / 7.0, 0, 0});
  ClusterTree t = build_cluster_tree(pts, 1, 2);
  CHECK(t.depth() == 2);
  CHECK(t.leaves().size() == 4);
  for (int id : t.leaves()) CHECK(t.node(id).size() == 2);
  check_cluster_invariants(t, pts);
}

TEST_CASE("small point sets give a single leaf") {
  auto pts = testing::random_points(10, 2, 1);
  ClusterTree t = build_cluster_tree(pts, 2, 10);
  CHECK(t.num_nodes() == 1);
  CHECK(t.root().is_leaf());
}

TEST_CASE("square corners split along the lowest axis first") {
  std::vector<Point> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  ClusterTree t = build_cluster_tree(pts, 2, 1);
  CHECK(t.leaves().size() == 4);
  const Cluster& left = t.node(t.root().sons[0]);
  CHECK(left.size() == 2);
  for (index_t k = left.begin; k < left.end; ++k) CHECK(pts[t.perm()[k]][0] == 0.0);
}

TEST_CASE("coincident points fall back to a median split") {
  std::vector<Point> pts(6, Point{0.5, 0.5, 0});
  ClusterTree t = build_cluster_tree(pts, 2, 1);
  CHECK(t.leaves().size() == 6);
  check_cluster_invariants(t, pts);
}

TEST_CASE("invalid input") {
  std::vector<Point> none;
  CHECK_THROWS(build_cluster_tree(none, 2, 4));
  auto pts = testing::random_points(5, 2, 2);
  CHECK_THROWS(build_cluster_tree(pts, 2, 0));
}

TEST_CASE("cluster invariants on random and mesh point sets") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pts = testing::random_points(50 + 37 * seed, 2 + seed % 2, seed);
    ClusterTree t = build_cluster_tree(pts, 2 + static_cast<int>(seed % 2), 1 + seed % 7);
    check_cluster_invariants(t, pts);
  }
}

TEST_CASE("depth grows logarithmically on quasi-uniform meshes") {
  for (int level = 3; level <= 6; ++level) {
    Mesh m = generate_mesh(MeshShape::unit_square, level);
    const auto pts = m.dof_points();
    ClusterTree t = build_cluster_tree(pts, 2, 16, m.dof_support_boxes());
    const double bound = 2.0 * std::log2(static_cast<double>(m.num_dofs()) / 16.0) + 3.0;
    CHECK(t.depth() <= bound);
    // cluster sizes at a fixed level stay within a constant factor of each other
    for (int lv = 1; lv <= 3; ++lv) {
      index_t lo = m.num_dofs(), hi = 0;
      for (int id = 0; id < t.num_nodes(); ++id)
        if (t.node(id).level == lv) {
          lo = std::min(lo, t.node(id).size());
          hi = std::max(hi, t.node(id).size());
        }
      CHECK(hi <= 3 * lo);
    }
  }
}

TEST_CASE("eta admissibility") {
  CHECK(is_eta_admissible(box1d(0, 1), box1d(3, 4), 2.0));
  CHECK_FALSE(is_eta_admissible(box1d(0, 1), box1d(1, 2), 100.0));
  CHECK_FALSE(is_eta_admissible(box1d(0, 2), box1d(3, 4), 1.0));
}

TEST_CASE("weak admissibility") {
  Cluster a = cluster(0, 10, box1d(0, 1));
  Cluster b = cluster(10, 20, box1d(2, 3));
  CHECK_FALSE(is_weakly_admissible(a, a, 1024));
  CHECK(midpoint_overlap_axes(a.support, b.support) == 0);
  CHECK(is_weakly_admissible(a, b, 1024));
  CHECK_FALSE(is_weakly_admissible(a, b, 10));

  BoundingBox cube = BoundingBox::empty(3);
  cube.extend(Point{0, 0, 0});
  cube.extend(Point{1, 1, 1});
  Cluster c = cluster(0, 5, cube), d = cluster(5, 10, cube);
  CHECK(midpoint_overlap_axes(c.support, d.support) == 3);
  CHECK_FALSE(is_weakly_admissible(c, d, 1024));
}

TEST_CASE("single leaf block tree") {
  auto c = make_clusters(testing::random_points(5, 2, 3), 2, 10);
  BlockClusterTree bt(c, AdmissibilityMode::all_eta, 2.0, 1024);
  REQUIRE(bt.leaves().size() == 1);
  CHECK(bt.root().label == BlockLabel::nearfield);
}

TEST_CASE("two separated groups of points") {
  std::vector<Point> pts;
  for (int i = 0; i <= 8; ++i) pts.push_back({i / 8.0, 0, 0});
  for (int i = 0; i <= 8; ++i) pts.push_back({9.0 + i / 8.0, 0, 0});
  auto c = make_clusters(pts, 1, 3);
  BlockClusterTree eta(c, AdmissibilityMode::all_eta, 2.0, 1024);
  const BlockNode& root = eta.root();
  REQUIRE(root.label == BlockLabel::subdivided);
  CHECK(eta.node(root.child(0, 1)).label == BlockLabel::farfield_eta);
  CHECK(eta.node(root.child(1, 0)).label == BlockLabel::farfield_eta);
  CHECK(eta.node(root.child(0, 0)).label == BlockLabel::subdivided);
  CHECK(eta.node(root.child(1, 1)).label == BlockLabel::subdivided);

  BlockClusterTree weak(c, AdmissibilityMode::weak, 2.0, 1000);
  CHECK(weak.leaves().size() <= eta.leaves().size());
  // inside each group the sibling blocks become farfield right away
  const BlockNode& d = weak.node(weak.root().child(0, 0));
  REQUIRE(d.label == BlockLabel::subdivided);
  CHECK(weak.node(d.child(0, 1)).label == BlockLabel::farfield_weak);
  const BlockNode& de = eta.node(eta.root().child(0, 0));
  CHECK(eta.node(de.child(0, 1)).label != BlockLabel::farfield_eta);
}

TEST_CASE("block trees tile the index square exactly") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(1, 2000), nmin(1, 40), dim(1, 3);
  int checked = 0;
  for (int trial = 0; trial < 110; ++trial) {
    const int d = dim(rng);
    const auto pts = testing::random_points(static_cast<std::size_t>(trial < 10 ? size(rng) : size(rng) % 600 + 1), d,
                                            1000 + trial);
    auto c = make_clusters(pts, d, nmin(rng));
    const auto mode = trial % 2 ? AdmissibilityMode::weak : AdmissibilityMode::all_eta;
    BlockClusterTree bt(c, mode, 0.5 + trial % 4, 64 + trial * 10);
    CHECK(tiles_exactly(bt));
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("leaf labels respect admissibility") {
  Mesh m = generate_mesh(MeshShape::unit_square, 5);
  auto c = std::make_shared<const ClusterTree>(build_cluster_tree(m.dof_points(), 2, 16, m.dof_support_boxes()));
  for (auto mode : {AdmissibilityMode::all_eta, AdmissibilityMode::weak}) {
    BlockClusterTree bt(c, mode, 2.0, 200);
    for (int id = 0; id < bt.num_nodes(); ++id) {
      const BlockNode& b = bt.node(id);
      const Cluster& s = c->node(b.row);
      const Cluster& t = c->node(b.col);
      switch (b.label) {
        case BlockLabel::farfield_eta: CHECK(is_eta_admissible(s, t, 2.0)); break;
        case BlockLabel::farfield_weak: CHECK(is_weakly_admissible(s, t, 200)); break;
        case BlockLabel::nearfield: CHECK((s.is_leaf() && t.is_leaf())); break;
        case BlockLabel::subdivided:
          CHECK_FALSE(is_eta_admissible(s, t, 2.0));
          if (mode == AdmissibilityMode::weak) CHECK_FALSE(is_weakly_admissible(s, t, 200));
          break;
      }
    }
  }
}

TEST_CASE("weak mode never produces more leaves and block rows stay sparse") {
  for (int level = 3; level <= 6; ++level) {
    Mesh m = generate_mesh(MeshShape::unit_square, level);
    auto c = std::make_shared<const ClusterTree>(build_cluster_tree(m.dof_points(), 2, 8, m.dof_support_boxes()));
    BlockClusterTree eta(c, AdmissibilityMode::all_eta, 2.0, 1024);
    BlockClusterTree weak(c, AdmissibilityMode::weak, 2.0, 1024);
    CHECK(weak.leaves().size() <= eta.leaves().size());
    const int depth = std::max(1, c->depth());
    CHECK(eta.max_blocks_per_row() <= 12 * depth);
    CHECK(weak.max_blocks_per_row() <= 4 * depth);
  }
}

TEST_CASE("block tree JSON") {
  auto c = make_clusters(testing::grid_points(8), 2, 4);
  BlockClusterTree bt(c, AdmissibilityMode::all_eta, 2.0, 1024);
  const auto j = bt.to_json();
  CHECK(j["size"] == 64);
  CHECK(j["mode"] == "all_eta");
  CHECK(j["blocks"].size() == bt.leaves().size());
  index_t area = 0;
  for (const auto& b : j["blocks"])
    area += (b["rows"][1].get<index_t>() - b["rows"][0].get<index_t>()) *
            (b["cols"][1].get<index_t>() - b["cols"][0].get<index_t>());
  CHECK(area == 64 * 64);
}
