#include "hcorr/fem.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace hcorr {

CoefficientField CoefficientField::laplace() {
  CoefficientField c;
  c.diffusion = [](const Point&) -> Eigen::Matrix3d { return Eigen::Matrix3d::Identity(); };
  c.reaction = [](const Point&) { return 0.0; };
  return c;
}

void CoefficientField::check_ellipticity(const Mesh& mesh, int samples, std::uint64_t seed) const {
  if (!(alpha_low > 0.0) || alpha_high < alpha_low) throw Error("invalid ellipticity bounds");
  if (mesh.num_elements() == 0) return;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<index_t> pick(0, mesh.num_elements() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = mesh.dim();
  for (int s = 0; s < samples; ++s) {
    const auto& el = mesh.elements()[pick(rng)];
    // Random convex combination of the element vertices.
    std::array<double, 4> w{};
    double total = 0.0;
    for (int k = 0; k <= d; ++k) total += (w[k] = -std::log(1.0 - unif(rng)));
    Point x{};
    for (int k = 0; k <= d; ++k)
      for (int a = 0; a < d; ++a) x[a] += w[k] / total * mesh.vertices()[el[k]][a];
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    for (int a = 0; a < d; ++a) xi[a] = normal(rng);
    const double nrm2 = xi.squaredNorm();
    if (nrm2 == 0.0) continue;
    const Eigen::Matrix3d A = diffusion(x);
    const double q = xi.dot(A * xi);
    const double slack = 1e-12 * alpha_high * nrm2;
    if (q < alpha_low * nrm2 - slack || q > alpha_high * nrm2 + slack)
      throw Error("diffusion coefficient violates the declared ellipticity bounds");
    if (reaction && reaction(x) < 0.0) throw Error("negative reaction coefficient");
  }
}

namespace {

// Gradients of the barycentric coordinates, one column per vertex.
Matrix barycentric_gradients(const Mesh& mesh, index_t e) {
  const int d = mesh.dim();
  const auto& el = mesh.elements()[e];
  const auto& v = mesh.vertices();
  Matrix J(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) J(k, j) = v[el[j + 1]][k] - v[el[0]][k];
  const Matrix Jinv = J.inverse();
  Matrix G(d, d + 1);
  G.rightCols(d) = Jinv.transpose();
  G.col(0) = -G.rightCols(d).rowwise().sum();
  return G;
}

SparseMatrix eliminate(const Mesh& mesh, const SparseMatrix& full) {
  std::vector<index_t> interior(static_cast<std::size_t>(mesh.num_dofs()));
  for (index_t i = 0; i < mesh.num_dofs(); ++i) interior[i] = mesh.vertex_of_dof(i);
  return full.submatrix(interior, interior);
}

}  // namespace

Matrix local_mass(const Mesh& mesh, index_t e) {
  const int n = mesh.dim() + 1;
  const double vol = mesh.element_volume(e);
  Matrix M = Matrix::Constant(n, n, 1.0);
  M.diagonal().array() += 1.0;
  return M * (vol / (n * (n + 1)));
}

Matrix local_stiffness(const Mesh& mesh, index_t e, const CoefficientField& coeffs) {
  const int d = mesh.dim();
  const Point b = mesh.element_barycenter(e);
  const Matrix G = barycentric_gradients(mesh, e);
  const Matrix A = coeffs.diffusion ? Matrix(coeffs.diffusion(b).topLeftCorner(d, d))
                                    : Matrix(Matrix::Identity(d, d));
  Matrix K = mesh.element_volume(e) * (G.transpose() * A * G);
  if (coeffs.reaction) {
    const double c = coeffs.reaction(b);
    if (c != 0.0) K += c * local_mass(mesh, e);
  }
  return K;
}

SparseMatrix assemble_stiffness_full(const Mesh& mesh, const CoefficientField& coeffs) {
  std::vector<Triplet> t;
  const int n = mesh.dim() + 1;
  t.reserve(static_cast<std::size_t>(mesh.num_elements() * n * n));
  for (index_t e = 0; e < mesh.num_elements(); ++e) {
    const Matrix K = local_stiffness(mesh, e, coeffs);
    const auto& el = mesh.elements()[e];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) t.push_back({el[a], el[b], K(a, b)});
  }
  return SparseMatrix(mesh.num_vertices(), mesh.num_vertices(), std::move(t));
}

SparseMatrix assemble_mass_full(const Mesh& mesh) {
  std::vector<Triplet> t;
  const int n = mesh.dim() + 1;
  for (index_t e = 0; e < mesh.num_elements(); ++e) {
    const Matrix M = local_mass(mesh, e);
    const auto& el = mesh.elements()[e];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) t.push_back({el[a], el[b], M(a, b)});
  }
  return SparseMatrix(mesh.num_vertices(), mesh.num_vertices(), std::move(t));
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeffs) {
  if (mesh.num_dofs() == 0) throw Error("mesh has no interior degrees of freedom");
  return eliminate(mesh, assemble_stiffness_full(mesh, coeffs));
}

SparseMatrix assemble_mass(const Mesh& mesh) { return eliminate(mesh, assemble_mass_full(mesh)); }

Vector assemble_load(const Mesh& mesh, const ScalarFn& f) {
  Vector load = Vector::Zero(mesh.num_dofs());
  const double share = 1.0 / (mesh.dim() + 1);
  for (index_t e = 0; e < mesh.num_elements(); ++e) {
    const double w = mesh.element_volume(e) * f(mesh.element_barycenter(e)) * share;
    for (index_t v : mesh.elements()[e])
      if (const index_t i = mesh.dof_of_vertex(v); i >= 0) load[i] += w;
  }
  return load;
}

Vector solve_mean(const SparseMatrix& stiffness, const Vector& mean_load) {
  if (stiffness.rows() != stiffness.cols() || stiffness.rows() != mean_load.size())
    throw Error("solve_mean: dimension mismatch");
  const double fnorm = mean_load.norm();
  if (fnorm == 0.0) return Vector::Zero(mean_load.size());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol(stiffness.to_eigen());
  if (chol.info() != Eigen::Success) throw NumericalError("solve_mean: stiffness matrix is not SPD");
  Vector e = chol.solve(mean_load);
  // One step of refinement keeps the residual at round-off level.
  e += chol.solve(mean_load - stiffness * e);
  const double res = (stiffness * e - mean_load).norm();
  if (!(res <= 1e-10 * fnorm)) throw NumericalError("solve_mean: did not converge");
  return e;
}

Vector expand_to_vertices(const Mesh& mesh, const Vector& dof_values) {
  if (dof_values.size() != mesh.num_dofs()) throw Error("expand_to_vertices: size mismatch");
  Vector v = Vector::Zero(mesh.num_vertices());
  for (index_t i = 0; i < mesh.num_dofs(); ++i) v[mesh.vertex_of_dof(i)] = dof_values[i];
  return v;
}

}  // namespace hcorr
