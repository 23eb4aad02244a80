#pragma once

#include "hcorr/mesh.hpp"
#include "hcorr/sparse.hpp"

#include <functional>
#include <random>

namespace hcorr {

using DiffusionFn = std::function<Eigen::Matrix3d(const Point&)>;
using ScalarFn = std::function<double(const Point&)>;

/// Coefficients of L u = -div(A grad u) + c u.
struct CoefficientField {
  DiffusionFn diffusion;
  ScalarFn reaction;
  double alpha_low = 1.0;
  double alpha_high = 1.0;

  /// A = I, c = 0 (the Laplacian).
  static CoefficientField laplace();

  /// Samples random points of the mesh and random directions, and checks the
  /// declared ellipticity bounds and c >= 0. Throws Error on violation.
  void check_ellipticity(const Mesh& mesh, int samples, std::uint64_t seed = 7) const;
};

/// Element matrix of -div(A grad) + c on one simplex. Diffusion is evaluated at
/// the barycenter (exact for constant A); the reaction term uses the exact P1
/// mass matrix scaled by c at the barycenter.
Matrix local_stiffness(const Mesh& mesh, index_t element, const CoefficientField& coeffs);
/// Exact P1 element mass matrix.
Matrix local_mass(const Mesh& mesh, index_t element);

/// Matrices over all vertices, before Dirichlet elimination.
SparseMatrix assemble_stiffness_full(const Mesh& mesh, const CoefficientField& coeffs);
SparseMatrix assemble_mass_full(const Mesh& mesh);

/// Matrices over the interior DoFs (boundary rows and columns eliminated).
SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeffs);
SparseMatrix assemble_mass(const Mesh& mesh);

/// Load vector (f, phi_i) by barycenter quadrature.
Vector assemble_load(const Mesh& mesh, const ScalarFn& f);

/// Direct sparse Cholesky solve; verifies ||A e - f|| <= 1e-10 ||f||.
Vector solve_mean(const SparseMatrix& stiffness, const Vector& mean_load);

/// Finite element function values at all vertices from DoF values (zero on the boundary).
Vector expand_to_vertices(const Mesh& mesh, const Vector& dof_values);

}  // namespace hcorr
