#pragma once

#include "hcorr/cluster.hpp"
#include "hcorr/hmatrix.hpp"

#include <random>
#include <vector>

namespace testing {

using namespace hcorr;

inline double rel_error(const Matrix& a, const Matrix& b) {
  const double n = b.norm();
  return n > 0.0 ? (a - b).norm() / n : a.norm();
}

inline std::vector<Point> random_points(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> p(n);
  for (auto& x : p)
    for (int a = 0; a < dim; ++a) x[a] = u(rng);
  return p;
}

inline std::vector<Point> grid_points(int m) {
  std::vector<Point> p;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) p.push_back({(i + 0.5) / m, (j + 0.5) / m, 0.0});
  return p;
}

inline std::shared_ptr<const ClusterTree> make_clusters(const std::vector<Point>& pts, int dim, index_t n_min) {
  return std::make_shared<const ClusterTree>(build_cluster_tree(pts, dim, n_min));
}

inline std::shared_ptr<const BlockClusterTree> make_blocks(std::shared_ptr<const ClusterTree> c, AdmissibilityMode mode,
                                                           double eta = 2.0, index_t weak_threshold = 1024) {
  return std::make_shared<const BlockClusterTree>(std::move(c), mode, eta, weak_threshold);
}

/// Entry generator of a dense matrix given in the original ordering.
inline EntryFn dense_entries(const Matrix& M) {
  return [&M](index_t i, index_t j) { return M(i, j); };
}

}  // namespace testing
