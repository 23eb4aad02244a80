#include "hcorr/w11.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hcorr {

namespace {

// Uniform bucket grid over the coarse elements' bounding boxes.
class ElementLocator {
 public:
  explicit ElementLocator(const Mesh& mesh) : mesh_(mesh), dim_(mesh.dim()) {
    box_ = mesh.bounding_box();
    const double cells = std::max(1.0, std::pow(static_cast<double>(mesh.num_elements()), 1.0 / dim_));
    for (int a = 0; a < dim_; ++a) n_[a] = std::max<index_t>(1, static_cast<index_t>(cells));
    index_t total = 1;
    for (int a = 0; a < dim_; ++a) total *= n_[a];
    buckets_.resize(static_cast<std::size_t>(total));
    for (index_t e = 0; e < mesh.num_elements(); ++e) {
      BoundingBox b = BoundingBox::empty(dim_);
      for (index_t v : mesh.elements()[e]) b.extend(mesh.vertices()[v]);
      std::array<index_t, 3> lo{}, hi{};
      for (int a = 0; a < dim_; ++a) {
        lo[a] = cell(b.lo[a], a);
        hi[a] = cell(b.hi[a], a);
      }
      for (index_t i = lo[0]; i <= hi[0]; ++i)
        for (index_t j = lo[1]; j <= (dim_ > 1 ? hi[1] : 0); ++j)
          for (index_t k = lo[2]; k <= (dim_ > 2 ? hi[2] : 0); ++k) buckets_[flat(i, j, k)].push_back(e);
    }
  }

  /// Element containing p with barycentric tolerance, or -1.
  index_t locate(const Point& p, std::array<double, 4>& lambda) const {
    std::array<index_t, 3> c{};
    for (int a = 0; a < dim_; ++a) c[a] = cell(p[a], a);
    index_t best = -1;
    double best_min = -1e300;
    for (index_t e : buckets_[flat(c[0], c[1], c[2])]) {
      std::array<double, 4> l{};
      barycentric(e, p, l);
      const double m = *std::min_element(l.begin(), l.begin() + dim_ + 1);
      if (m > best_min) {
        best_min = m;
        best = e;
        lambda = l;
      }
    }
    return best_min >= -1e-9 ? best : -1;
  }

  void barycentric(index_t e, const Point& p, std::array<double, 4>& l) const {
    const auto& el = mesh_.elements()[e];
    const Point& v0 = mesh_.vertices()[el[0]];
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (int a = 0; a < dim_; ++a) {
      for (int k = 0; k < dim_; ++k) J(a, k) = mesh_.vertices()[el[k + 1]][a] - v0[a];
      r[a] = p[a] - v0[a];
    }
    const Eigen::VectorXd s = J.topLeftCorner(dim_, dim_).partialPivLu().solve(r.head(dim_));
    double sum = 0.0;
    for (int k = 0; k < dim_; ++k) {
      l[k + 1] = s[k];
      sum += s[k];
    }
    l[0] = 1.0 - sum;
  }

 private:
  index_t cell(double x, int a) const {
    const double w = box_.edge(a);
    if (w <= 0.0) return 0;
    const auto c = static_cast<index_t>(std::floor((x - box_.lo[a]) / w * static_cast<double>(n_[a])));
    return std::clamp<index_t>(c, 0, n_[a] - 1);
  }
  std::size_t flat(index_t i, index_t j, index_t k) const {
    return static_cast<std::size_t>((k * n_[1] + j) * n_[0] + i);
  }

  const Mesh& mesh_;
  int dim_;
  BoundingBox box_;
  std::array<index_t, 3> n_{1, 1, 1};
  std::vector<std::vector<index_t>> buckets_;
};

// Integral of |e| for e linear on a simplex with the given vertex values.
double abs_integral(int dim, std::array<Point, 4> v, std::array<double, 4> f, double volume, int depth) {
  double lo = f[0], hi = f[0], mean = 0.0;
  for (int k = 0; k <= dim; ++k) {
    lo = std::min(lo, f[k]);
    hi = std::max(hi, f[k]);
    mean += f[k];
  }
  mean /= dim + 1;
  if (lo >= 0.0 || hi <= 0.0 || depth == 0) return volume * std::abs(mean);
  // Bisect the longest edge.
  int ea = 0, eb = 1;
  double longest = -1.0;
  for (int a = 0; a <= dim; ++a)
    for (int b = a + 1; b <= dim; ++b) {
      double l2 = 0.0;
      for (int c = 0; c < dim; ++c) l2 += (v[a][c] - v[b][c]) * (v[a][c] - v[b][c]);
      if (l2 > longest) {
        longest = l2;
        ea = a;
        eb = b;
      }
    }
  Point m{};
  for (int c = 0; c < dim; ++c) m[c] = 0.5 * (v[ea][c] + v[eb][c]);
  const double fm = 0.5 * (f[ea] + f[eb]);
  auto va = v, vb = v;
  auto fa = f, fb = f;
  va[eb] = m;
  fa[eb] = fm;
  vb[ea] = m;
  fb[ea] = fm;
  return abs_integral(dim, va, fa, volume / 2, depth - 1) + abs_integral(dim, vb, fb, volume / 2, depth - 1);
}

}  // namespace

Vector interpolate_nested(const Mesh& coarse, const Vector& trace_coarse, const Mesh& fine) {
  if (coarse.dim() != fine.dim()) throw MeshError("non-nested meshes: dimensions differ");
  if (trace_coarse.size() != coarse.num_vertices()) throw Error("coarse trace must have one value per vertex");
  ElementLocator loc(coarse);
  Vector out(fine.num_vertices());
  for (index_t v = 0; v < fine.num_vertices(); ++v) {
    std::array<double, 4> l{};
    const index_t e = loc.locate(fine.vertices()[v], l);
    if (e < 0) throw MeshError("non-nested meshes: vertex outside the coarse mesh");
    double s = 0.0;
    for (int k = 0; k <= coarse.dim(); ++k) s += l[k] * trace_coarse[coarse.elements()[e][k]];
    out[v] = s;
  }
  return out;
}

double w11_trace_error(const Mesh& coarse, const Vector& trace_coarse, const Mesh& ref, const Vector& trace_ref) {
  if (trace_ref.size() != ref.num_vertices()) throw Error("reference trace must have one value per vertex");
  if (trace_coarse.size() != coarse.num_vertices()) throw Error("coarse trace must have one value per vertex");
  if (coarse.dim() != ref.dim()) throw MeshError("non-nested meshes: dimensions differ");
  const int d = ref.dim();
  ElementLocator loc(coarse);
  double total = 0.0;
  for (index_t e = 0; e < ref.num_elements(); ++e) {
    const auto& el = ref.elements()[e];
    std::array<double, 4> lb{};
    const index_t host = loc.locate(ref.element_barycenter(e), lb);
    if (host < 0) throw MeshError("non-nested meshes: element outside the coarse mesh");
    std::array<Point, 4> v{};
    std::array<double, 4> err{};
    for (int k = 0; k <= d; ++k) {
      v[k] = ref.vertices()[el[k]];
      std::array<double, 4> l{};
      loc.barycentric(host, v[k], l);
      double s = 0.0;
      for (int q = 0; q <= d; ++q) {
        if (l[q] < -1e-9) throw MeshError("non-nested meshes: element crosses a coarse element boundary");
        s += l[q] * trace_coarse[coarse.elements()[host][q]];
      }
      err[k] = s - trace_ref[el[k]];
    }
    const double vol = ref.element_volume(e);
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    Eigen::Vector3d df = Eigen::Vector3d::Zero();
    for (int k = 0; k < d; ++k) {
      for (int a = 0; a < d; ++a) J(k, a) = v[k + 1][a] - v[0][a];
      df[k] = err[k + 1] - err[0];
    }
    const Eigen::VectorXd grad = J.topLeftCorner(d, d).partialPivLu().solve(df.head(d));
    total += vol * grad.norm() + abs_integral(d, v, err, vol, 16);
  }
  return total;
}

}  // namespace hcorr
