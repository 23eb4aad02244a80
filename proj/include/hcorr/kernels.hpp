#pragma once

#include "hcorr/lowrank.hpp"
#include "hcorr/mesh.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace hcorr {

enum class KernelFamily { gaussian, exponential, matern52 };

KernelFamily parse_kernel_family(std::string_view name);
std::string to_string(KernelFamily family);

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double length = 1.0;
};

/// Isotropic correlation kernel k(x, y); throws Error if the length is not positive.
double evaluate(const KernelSpec& spec, const Point& x, const Point& y, int dim);
/// k as a function of the scaled distance r / length; values below about 1e-150 are returned as 0.
double evaluate_scaled(KernelFamily family, double scaled_distance);

/// Galerkin entries (k, phi_i (x) phi_j) by one-point barycentre quadrature on
/// every pair of elements in the supports. Indices are DoF numbers.
EntryFn galerkin_entry_gen(const KernelSpec& spec, const Mesh& mesh);

/// Point kernel matrix entries k(x_i, x_j).
EntryFn point_entry_gen(const KernelSpec& spec, std::vector<Point> points, int dim);

}  // namespace hcorr
