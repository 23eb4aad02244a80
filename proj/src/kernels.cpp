#include "hcorr/kernels.hpp"

#include <cmath>
#include <memory>

namespace hcorr {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "exponential") return KernelFamily::exponential;
  if (name == "matern52") return KernelFamily::matern52;
  throw Error("unknown kernel family '" + std::string(name) + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::matern52: return "matern52";
  }
  return "unknown";
}

namespace {

// exp(-345) is about 1e-150. Smaller kernel values are returned as zero without
// calling exp, so that neither its slow underflow path nor subnormal products
// with quadrature weights occur; relative to k(x, x) = 1 they carry no information.
constexpr double max_exponent = 345.0;

double decay(double a) { return a > max_exponent ? 0.0 : std::exp(-a); }

}  // namespace

double evaluate_scaled(KernelFamily family, double s) {
  switch (family) {
    case KernelFamily::gaussian: return decay(0.5 * s * s);
    case KernelFamily::exponential: return decay(s);
    case KernelFamily::matern52: {
      const double t = std::sqrt(5.0) * s;
      return (1.0 + t + t * t / 3.0) * decay(t);
    }
  }
  return 0.0;
}

namespace {

double scaled_distance(const Point& x, const Point& y, int dim, double length) {
  double s2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    const double d = (x[a] - y[a]) / length;
    s2 += d * d;
  }
  return std::sqrt(s2);
}

void check_length(const KernelSpec& spec) {
  if (!(spec.length > 0.0) || !std::isfinite(spec.length))
    throw Error("correlation length must be positive and finite");
}

}  // namespace

double evaluate(const KernelSpec& spec, const Point& x, const Point& y, int dim) {
  check_length(spec);
  return evaluate_scaled(spec.family, scaled_distance(x, y, dim, spec.length));
}

EntryFn galerkin_entry_gen(const KernelSpec& spec, const Mesh& mesh) {
  check_length(spec);
  struct Quad {
    Point point;
    double weight;
  };
  auto table = std::make_shared<std::vector<std::vector<Quad>>>(static_cast<std::size_t>(mesh.num_dofs()));
  const double share = 1.0 / (mesh.dim() + 1);
  for (index_t i = 0; i < mesh.num_dofs(); ++i) {
    for (index_t e : mesh.vertex_elements()[mesh.vertex_of_dof(i)])
      (*table)[i].push_back({mesh.element_barycenter(e), mesh.element_volume(e) * share});
  }
  const int dim = mesh.dim();
  return [table, spec, dim](index_t i, index_t j) {
    double sum = 0.0;
    for (const Quad& a : (*table)[i])
      for (const Quad& b : (*table)[j])
        sum += a.weight * b.weight * evaluate_scaled(spec.family, scaled_distance(a.point, b.point, dim, spec.length));
    return sum;
  };
}

EntryFn point_entry_gen(const KernelSpec& spec, std::vector<Point> points, int dim) {
  check_length(spec);
  auto pts = std::make_shared<const std::vector<Point>>(std::move(points));
  return [pts, spec, dim](index_t i, index_t j) {
    return evaluate_scaled(spec.family, scaled_distance((*pts)[i], (*pts)[j], dim, spec.length));
  };
}

}  // namespace hcorr
