#pragma once

#include "hcorr/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hcorr {

/// Axis-aligned box in up to three dimensions.
struct BoundingBox {
  int dim = 0;
  Point lo{};
  Point hi{};

  static BoundingBox empty(int dim);
  void extend(const Point& p);
  void extend(const BoundingBox& other);
  double diameter() const;
  double edge(int axis) const { return hi[axis] - lo[axis]; }
  bool contains(const Point& p, double slack = 0.0) const;
  /// Euclidean distance between two boxes; zero when they touch or overlap.
  double distance(const BoundingBox& other) const;
};

/// Simplicial mesh (triangles for d = 2, tetrahedra for d = 3) with Dirichlet
/// boundary markers. Interior vertices carry the P1 degrees of freedom.
class Mesh {
 public:
  Mesh() = default;
  /// Validates every invariant and orients elements to positive volume.
  Mesh(int dim, std::vector<Point> vertices, std::vector<std::vector<index_t>> elements,
       std::vector<bool> boundary);

  int dim() const { return dim_; }
  index_t num_vertices() const { return static_cast<index_t>(vertices_.size()); }
  index_t num_elements() const { return static_cast<index_t>(elements_.size()); }
  index_t num_dofs() const { return static_cast<index_t>(dof_to_vertex_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::vector<index_t>>& elements() const { return elements_; }
  const std::vector<bool>& boundary() const { return boundary_; }

  /// DoF index of a vertex, or -1 for boundary vertices.
  index_t dof_of_vertex(index_t v) const { return vertex_to_dof_[v]; }
  index_t vertex_of_dof(index_t i) const { return dof_to_vertex_[i]; }

  /// Interpolation points x_i (the DoF vertices).
  std::vector<Point> dof_points() const;
  /// Bounding box of supp(phi_i) for every DoF.
  std::vector<BoundingBox> dof_support_boxes() const;
  /// Elements adjacent to each vertex.
  const std::vector<std::vector<index_t>>& vertex_elements() const { return vertex_elements_; }

  /// Signed volume of an element as stored (positive after construction).
  double element_volume(index_t e) const;
  Point element_barycenter(index_t e) const;
  /// Total measure |D|.
  double measure() const;
  BoundingBox bounding_box() const;
  /// Longest element edge.
  double mesh_size() const;

 private:
  int dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<std::vector<index_t>> elements_;
  std::vector<bool> boundary_;
  std::vector<index_t> vertex_to_dof_;
  std::vector<index_t> dof_to_vertex_;
  std::vector<std::vector<index_t>> vertex_elements_;
};

enum class MeshShape { unit_square, unit_cube, annulus2d };

MeshShape parse_mesh_shape(std::string_view name);
std::string to_string(MeshShape shape);

/// Structured quasi-uniform mesh; the mesh size halves with every level.
Mesh generate_mesh(MeshShape shape, int refinement_level);
Mesh generate_mesh(std::string_view shape, int refinement_level);

/// Reads the plain text mesh format (see README).
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_mesh(std::istream& in);
void write_mesh(std::ostream& out, const Mesh& mesh);

/// Signed measure of the simplex spanned by the given vertices.
double simplex_volume(int dim, const Point* const* corners);

}  // namespace hcorr
