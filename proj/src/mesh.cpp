#include "hcorr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace hcorr {

BoundingBox BoundingBox::empty(int dim) {
  BoundingBox box;
  box.dim = dim;
  box.lo.fill(std::numeric_limits<double>::infinity());
  box.hi.fill(-std::numeric_limits<double>::infinity());
  for (int k = dim; k < max_dim; ++k) box.lo[k] = box.hi[k] = 0.0;
  return box;
}

void BoundingBox::extend(const Point& p) {
  for (int k = 0; k < dim; ++k) {
    lo[k] = std::min(lo[k], p[k]);
    hi[k] = std::max(hi[k], p[k]);
  }
}

void BoundingBox::extend(const BoundingBox& other) {
  for (int k = 0; k < dim; ++k) {
    lo[k] = std::min(lo[k], other.lo[k]);
    hi[k] = std::max(hi[k], other.hi[k]);
  }
}

double BoundingBox::diameter() const {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(s);
}

bool BoundingBox::contains(const Point& p, double slack) const {
  for (int k = 0; k < dim; ++k)
    if (p[k] < lo[k] - slack || p[k] > hi[k] + slack) return false;
  return true;
}

double BoundingBox::distance(const BoundingBox& other) const {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double gap = std::max({0.0, other.lo[k] - hi[k], lo[k] - other.hi[k]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

double simplex_volume(int dim, const Point* const* c) {
  if (dim == 2) {
    const double ax = (*c[1])[0] - (*c[0])[0], ay = (*c[1])[1] - (*c[0])[1];
    const double bx = (*c[2])[0] - (*c[0])[0], by = (*c[2])[1] - (*c[0])[1];
    return 0.5 * (ax * by - ay * bx);
  }
  Eigen::Matrix3d m;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) m(k, j) = (*c[j + 1])[k] - (*c[0])[k];
  return m.determinant() / 6.0;
}

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<std::vector<index_t>> elements,
           std::vector<bool> boundary)
    : dim_(dim),
      vertices_(std::move(vertices)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary)) {
  if (dim_ != 2 && dim_ != 3) throw MeshError("unsupported dimension " + std::to_string(dim_));
  const index_t nv = num_vertices();
  if (static_cast<index_t>(boundary_.size()) != nv)
    throw MeshError("boundary flags do not match vertex count");
  for (const auto& v : vertices_)
    for (int k = 0; k < dim_; ++k)
      if (!std::isfinite(v[k])) throw MeshError("non-finite vertex coordinate");

  // Scale for the degeneracy test.
  BoundingBox box = BoundingBox::empty(dim_);
  for (const auto& v : vertices_) box.extend(v);
  const double scale = nv > 0 ? std::pow(std::max(box.diameter(), 1e-300), dim_) : 1.0;

  for (index_t e = 0; e < num_elements(); ++e) {
    auto& el = elements_[e];
    if (static_cast<int>(el.size()) != dim_ + 1)
      throw MeshError("element " + std::to_string(e) + " has wrong number of vertices");
    for (index_t v : el)
      if (v < 0 || v >= nv)
        throw MeshError("element " + std::to_string(e) + ": vertex index out of range (" +
                        std::to_string(v) + " of " + std::to_string(nv) + ")");
    auto sorted = el;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MeshError("degenerate element " + std::to_string(e) + ": repeated vertex");
    double vol = element_volume(e);
    if (std::abs(vol) <= 1e-14 * scale)
      throw MeshError("degenerate element " + std::to_string(e) + ": zero volume");
    if (vol < 0) std::swap(el[dim_ - 1], el[dim_]);
  }

  vertex_to_dof_.assign(nv, -1);
  for (index_t v = 0; v < nv; ++v) {
    if (!boundary_[v]) {
      vertex_to_dof_[v] = static_cast<index_t>(dof_to_vertex_.size());
      dof_to_vertex_.push_back(v);
    }
  }
  vertex_elements_.assign(nv, {});
  for (index_t e = 0; e < num_elements(); ++e)
    for (index_t v : elements_[e]) vertex_elements_[v].push_back(e);
  for (index_t i = 0; i < num_dofs(); ++i)
    if (vertex_elements_[dof_to_vertex_[i]].empty())
      throw MeshError("interior vertex " + std::to_string(dof_to_vertex_[i]) +
                      " belongs to no element");
}

std::vector<Point> Mesh::dof_points() const {
  std::vector<Point> pts;
  pts.reserve(dof_to_vertex_.size());
  for (index_t v : dof_to_vertex_) pts.push_back(vertices_[v]);
  return pts;
}

std::vector<BoundingBox> Mesh::dof_support_boxes() const {
  std::vector<BoundingBox> boxes;
  boxes.reserve(dof_to_vertex_.size());
  for (index_t v : dof_to_vertex_) {
    BoundingBox b = BoundingBox::empty(dim_);
    for (index_t e : vertex_elements_[v])
      for (index_t w : elements_[e]) b.extend(vertices_[w]);
    boxes.push_back(b);
  }
  return boxes;
}

double Mesh::element_volume(index_t e) const {
  const auto& el = elements_[e];
  const Point* c[4];
  for (int k = 0; k <= dim_; ++k) c[k] = &vertices_[el[k]];
  return simplex_volume(dim_, c);
}

Point Mesh::element_barycenter(index_t e) const {
  Point b{};
  for (index_t v : elements_[e])
    for (int k = 0; k < dim_; ++k) b[k] += vertices_[v][k];
  for (int k = 0; k < dim_; ++k) b[k] /= (dim_ + 1);
  return b;
}

double Mesh::measure() const {
  double s = 0.0;
  for (index_t e = 0; e < num_elements(); ++e) s += element_volume(e);
  return s;
}

BoundingBox Mesh::bounding_box() const {
  BoundingBox b = BoundingBox::empty(dim_);
  for (const auto& v : vertices_) b.extend(v);
  return b;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (const auto& el : elements_)
    for (std::size_t a = 0; a < el.size(); ++a)
      for (std::size_t b = a + 1; b < el.size(); ++b) {
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) {
          const double d = vertices_[el[a]][k] - vertices_[el[b]][k];
          s += d * d;
        }
        h = std::max(h, std::sqrt(s));
      }
  return h;
}

MeshShape parse_mesh_shape(std::string_view name) {
  if (name == "unit_square") return MeshShape::unit_square;
  if (name == "unit_cube") return MeshShape::unit_cube;
  if (name == "annulus2d") return MeshShape::annulus2d;
  throw Error("unsupported mesh shape '" + std::string(name) + "'");
}

std::string to_string(MeshShape shape) {
  switch (shape) {
    case MeshShape::unit_square: return "unit_square";
    case MeshShape::unit_cube: return "unit_cube";
    case MeshShape::annulus2d: return "annulus2d";
  }
  return "?";
}

namespace {

Mesh make_square(int level) {
  const index_t n = index_t{1} << level;
  const index_t m = n + 1;
  const double h = 1.0 / static_cast<double>(n);
  std::vector<Point> verts;
  std::vector<bool> bnd;
  for (index_t j = 0; j < m; ++j)
    for (index_t i = 0; i < m; ++i) {
      verts.push_back({i * h, j * h, 0.0});
      bnd.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  std::vector<std::vector<index_t>> elems;
  auto id = [m](index_t i, index_t j) { return j * m + i; };
  for (index_t j = 0; j < n; ++j)
    for (index_t i = 0; i < n; ++i) {
      elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elems.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh(2, std::move(verts), std::move(elems), std::move(bnd));
}

Mesh make_cube(int level) {
  const index_t n = index_t{1} << level;
  const index_t m = n + 1;
  const double h = 1.0 / static_cast<double>(n);
  std::vector<Point> verts;
  std::vector<bool> bnd;
  for (index_t k = 0; k < m; ++k)
    for (index_t j = 0; j < m; ++j)
      for (index_t i = 0; i < m; ++i) {
        verts.push_back({i * h, j * h, k * h});
        bnd.push_back(i == 0 || j == 0 || k == 0 || i == n || j == n || k == n);
      }
  auto id = [m](index_t i, index_t j, index_t k) { return (k * m + j) * m + i; };
  // Kuhn subdivision: one tetrahedron per permutation of the axes.
  constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::vector<index_t>> elems;
  for (index_t k = 0; k < n; ++k)
    for (index_t j = 0; j < n; ++j)
      for (index_t i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<index_t, 3> c{i, j, k};
          std::vector<index_t> tet{id(c[0], c[1], c[2])};
          for (int a : p) {
            ++c[a];
            tet.push_back(id(c[0], c[1], c[2]));
          }
          elems.push_back(std::move(tet));
        }
  return Mesh(3, std::move(verts), std::move(elems), std::move(bnd));
}

Mesh make_annulus(int level) {
  constexpr double r_in = 0.5, r_out = 1.0;
  const index_t nr = index_t{1} << level;
  const index_t nt = 12 * nr;
  std::vector<Point> verts;
  std::vector<bool> bnd;
  for (index_t j = 0; j <= nr; ++j) {
    const double r = r_in + (r_out - r_in) * static_cast<double>(j) / static_cast<double>(nr);
    for (index_t i = 0; i < nt; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nt);
      verts.push_back({r * std::cos(t), r * std::sin(t), 0.0});
      bnd.push_back(j == 0 || j == nr);
    }
  }
  auto id = [nt](index_t i, index_t j) { return j * nt + (i % nt); };
  std::vector<std::vector<index_t>> elems;
  for (index_t j = 0; j < nr; ++j)
    for (index_t i = 0; i < nt; ++i) {
      elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elems.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh(2, std::move(verts), std::move(elems), std::move(bnd));
}

// Token stream over a text file that keeps track of line numbers and strips
// '#' comments.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (!(line_stream_ >> tok)) {
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_);
    return tok;
  }

  void keyword(const char* kw) {
    const std::string tok = expect(kw);
    if (tok != kw) throw ParseError("expected '" + std::string(kw) + "', got '" + tok + "'", line_no_);
  }

  long long integer(const char* what) {
    const std::string tok = expect(what);
    try {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected integer ") + what + ", got '" + tok + "'", line_no_);
    }
  }

  double real(const char* what) {
    const std::string tok = expect(what);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(std::string("expected number ") + what + ", got '" + tok + "'", line_no_);
    }
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::istringstream line_stream_;
  int line_no_ = 0;
};

}  // namespace

Mesh generate_mesh(MeshShape shape, int refinement_level) {
  if (refinement_level < 0) throw Error("refinement level must be non-negative");
  if (refinement_level > 12) throw Error("refinement level too large");
  switch (shape) {
    case MeshShape::unit_square: return make_square(refinement_level);
    case MeshShape::unit_cube: return make_cube(refinement_level);
    case MeshShape::annulus2d: return make_annulus(refinement_level);
  }
  throw Error("unsupported mesh shape");
}

Mesh generate_mesh(std::string_view shape, int refinement_level) {
  return generate_mesh(parse_mesh_shape(shape), refinement_level);
}

Mesh parse_mesh(std::istream& in) {
  TokenReader rd(in);
  rd.keyword("dim");
  const long long dim = rd.integer("dimension");
  if (dim != 2 && dim != 3) throw ParseError("dimension must be 2 or 3", rd.line());
  rd.keyword("vertices");
  const long long nv = rd.integer("vertex count");
  if (nv < 0) throw ParseError("negative vertex count", rd.line());
  std::vector<Point> verts(static_cast<std::size_t>(nv), Point{});
  for (auto& v : verts)
    for (int k = 0; k < dim; ++k) v[k] = rd.real("coordinate");
  rd.keyword("elements");
  const long long ne = rd.integer("element count");
  if (ne < 0) throw ParseError("negative element count", rd.line());
  std::vector<std::vector<index_t>> elems(static_cast<std::size_t>(ne));
  for (auto& el : elems) {
    for (int k = 0; k <= dim; ++k) {
      const long long idx = rd.integer("vertex index");
      if (idx < 0 || idx >= nv)
        throw ParseError("vertex index out of range (" + std::to_string(idx) + " of " +
                             std::to_string(nv) + ")",
                         rd.line());
      el.push_back(static_cast<index_t>(idx));
    }
    auto sorted = el;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ParseError("degenerate element (repeated vertex)", rd.line());
  }
  rd.keyword("boundary");
  const long long nb = rd.integer("boundary count");
  std::vector<bool> bnd(static_cast<std::size_t>(nv), false);
  for (long long b = 0; b < nb; ++b) {
    const long long idx = rd.integer("boundary vertex");
    if (idx < 0 || idx >= nv)
      throw ParseError("boundary vertex index out of range (" + std::to_string(idx) + ")", rd.line());
    bnd[static_cast<std::size_t>(idx)] = true;
  }
  std::string extra;
  if (rd.next(extra)) throw ParseError("trailing content '" + extra + "'", rd.line());
  return Mesh(static_cast<int>(dim), std::move(verts), std::move(elems), std::move(bnd));
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'", 0);
  return parse_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << "dim " << mesh.dim() << "\n";
  out << "vertices " << mesh.num_vertices() << "\n" << std::setprecision(17);
  for (const auto& v : mesh.vertices()) {
    for (int k = 0; k < mesh.dim(); ++k) out << (k ? " " : "") << v[k];
    out << "\n";
  }
  out << "elements " << mesh.num_elements() << "\n";
  for (const auto& el : mesh.elements()) {
    for (std::size_t k = 0; k < el.size(); ++k) out << (k ? " " : "") << el[k];
    out << "\n";
  }
  index_t nb = 0;
  for (bool b : mesh.boundary()) nb += b;
  out << "boundary " << nb << "\n";
  for (index_t v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.boundary()[v]) out << v << "\n";
}

}  // namespace hcorr
