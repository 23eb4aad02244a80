#include "hcorr/fem.hpp"
#include "hcorr/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace hcorr;

namespace {

const char* two_triangles = R"(# unit square
dim 2
vertices 4
0 0
1 0
1 1
0 1
elements 2
0 1 2
0 2 3
boundary 4
0 1 2 3
)";

Mesh parse(const std::string& text) {
  std::istringstream in(text);
  return parse_mesh(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Mesh reference_triangle() {
  return Mesh(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, {true, true, true});
}

double min_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("generated meshes have the expected sizes") {
  Mesh a = generate_mesh(MeshShape::unit_square, 0);
  CHECK(a.num_vertices() == 4);
  CHECK(a.num_elements() == 2);
  CHECK(a.num_dofs() == 0);

  Mesh b = generate_mesh(MeshShape::unit_square, 2);
  CHECK(b.num_vertices() == 25);
  CHECK(b.num_dofs() == 9);

  Mesh c = generate_mesh(MeshShape::unit_cube, 1);
  CHECK(c.num_vertices() == 27);
  CHECK(c.num_dofs() == 1);

  for (int level = 0; level <= 4; ++level) {
    const int m = (1 << level) + 1;
    Mesh s = generate_mesh("unit_square", level);
    CHECK(s.num_vertices() == m * m);
    CHECK(s.num_dofs() == (m - 2) * (m - 2));
  }
}

TEST_CASE("mesh size halves per level") {
  for (MeshShape shape : {MeshShape::unit_square, MeshShape::unit_cube, MeshShape::annulus2d}) {
    const double h1 = generate_mesh(shape, 1).mesh_size();
    const double h2 = generate_mesh(shape, 2).mesh_size();
    CHECK(h1 / h2 == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("unknown mesh shapes are rejected") {
  CHECK_THROWS_WITH(generate_mesh("dumbbell", 1), doctest::Contains("unsupported mesh shape"));
  CHECK_THROWS(generate_mesh(MeshShape::unit_square, -1));
}

TEST_CASE("mesh files") {
  Mesh m = parse(two_triangles);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_elements() == 2);
  CHECK(m.num_dofs() == 0);
  CHECK(m.measure() == doctest::Approx(1.0));

  std::string bad_index = two_triangles;
  bad_index.replace(bad_index.find("0 2 3"), 5, "0 2 99");
  CHECK(error_of(bad_index).find("index out of range") != std::string::npos);
  CHECK(error_of(bad_index).find("line 10") != std::string::npos);

  std::string repeated = two_triangles;
  repeated.replace(repeated.find("0 2 3"), 5, "0 2 2");
  CHECK(error_of(repeated).find("degenerate element") != std::string::npos);

  std::string flat = two_triangles;
  flat.replace(flat.find("0 1\nelements"), 3, "0.5 0.5");
  CHECK(error_of(flat).find("degenerate element") != std::string::npos);

  CHECK(error_of("dim 2\nvertices x\n").find("parse error at line 2") != std::string::npos);
  CHECK(error_of("dim 2\nvertices 1\n0 0\nelements 0\n").find("parse error") != std::string::npos);
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.txt"), ParseError);
}

TEST_CASE("mesh files round trip") {
  Mesh m = generate_mesh(MeshShape::annulus2d, 1);
  std::stringstream buf;
  write_mesh(buf, m);
  Mesh r = parse_mesh(buf);
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.num_elements() == m.num_elements());
  CHECK(r.num_dofs() == m.num_dofs());
  CHECK(r.measure() == doctest::Approx(m.measure()).epsilon(1e-12));
}

TEST_CASE("clockwise elements are reoriented") {
  Mesh m(2, {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}}, {{0, 1, 2}}, {true, true, true});
  CHECK(m.element_volume(0) == doctest::Approx(0.5));
}

TEST_CASE("support boxes cover the adjacent elements") {
  Mesh m = generate_mesh(MeshShape::unit_square, 2);
  const auto boxes = m.dof_support_boxes();
  const auto pts = m.dof_points();
  for (index_t i = 0; i < m.num_dofs(); ++i) {
    CHECK(boxes[i].contains(pts[i]));
    CHECK(boxes[i].diameter() == doctest::Approx(std::sqrt(2.0) * 0.5));
  }
}

TEST_CASE("reference triangle element matrices") {
  Mesh t = reference_triangle();
  Matrix k = local_stiffness(t, 0, CoefficientField::laplace());
  Matrix expect(3, 3);
  expect << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  expect *= 0.5;
  CHECK((k - expect).norm() < 1e-14);

  Matrix mm = local_mass(t, 0);
  Matrix mexpect(3, 3);
  mexpect << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  mexpect *= 0.5 / 12.0;
  CHECK((mm - mexpect).norm() < 1e-15);
}

TEST_CASE("five point stencil on the level 2 square") {
  Mesh m = generate_mesh(MeshShape::unit_square, 2);
  Matrix A = assemble_stiffness(m, CoefficientField::laplace()).to_dense();
  const auto pts = m.dof_points();
  for (index_t i = 0; i < m.num_dofs(); ++i)
    for (index_t j = 0; j < m.num_dofs(); ++j) {
      const double dx = std::abs(pts[i][0] - pts[j][0]) * 4, dy = std::abs(pts[i][1] - pts[j][1]) * 4;
      double expect = 0.0;
      if (i == j) expect = 4.0;
      else if (std::abs(dx + dy - 1.0) < 1e-9) expect = -1.0;
      CHECK(A(i, j) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("constants lie in the kernel of the full Laplacian") {
  for (MeshShape shape : {MeshShape::unit_square, MeshShape::unit_cube, MeshShape::annulus2d}) {
    SparseMatrix K = assemble_stiffness_full(generate_mesh(shape, 2), CoefficientField::laplace());
    const Vector ones = Vector::Ones(K.cols());
    CHECK((K * ones).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("patch test: linear functions are discrete harmonic at interior vertices") {
  for (MeshShape shape : {MeshShape::unit_square, MeshShape::unit_cube, MeshShape::annulus2d}) {
    Mesh m = generate_mesh(shape, 2);
    SparseMatrix K = assemble_stiffness_full(m, CoefficientField::laplace());
    Vector u(m.num_vertices());
    for (index_t v = 0; v < m.num_vertices(); ++v) u[v] = m.vertices()[v][0];
    const Vector r = K * u;
    for (index_t i = 0; i < m.num_dofs(); ++i) CHECK(std::abs(r[m.vertex_of_dof(i)]) < 1e-12);
  }
}

TEST_CASE("mass matrix integrates to the domain measure") {
  CHECK(assemble_mass_full(generate_mesh(MeshShape::unit_square, 2)).to_dense().sum() == doctest::Approx(1.0));
  CHECK(assemble_mass_full(generate_mesh(MeshShape::unit_cube, 2)).to_dense().sum() == doctest::Approx(1.0));
  Mesh ann = generate_mesh(MeshShape::annulus2d, 2);
  CHECK(assemble_mass_full(ann).to_dense().sum() == doctest::Approx(ann.measure()).epsilon(1e-12));
  CHECK(ann.measure() == doctest::Approx(std::numbers::pi * 0.75).epsilon(0.02));
}

TEST_CASE("stiffness and mass are symmetric positive definite") {
  struct Case {
    MeshShape shape;
    int level;
  };
  for (Case c : {Case{MeshShape::unit_square, 4}, Case{MeshShape::unit_cube, 2}, Case{MeshShape::annulus2d, 1}}) {
    Mesh m = generate_mesh(c.shape, c.level);
    REQUIRE(m.num_dofs() <= 500);
    SparseMatrix A = assemble_stiffness(m, CoefficientField::laplace());
    SparseMatrix M = assemble_mass(m);
    CHECK(A.is_symmetric(1e-14));
    CHECK(M.is_symmetric(1e-14));
    CHECK(min_eigenvalue(A.to_dense()) > 0.0);
    CHECK(min_eigenvalue(M.to_dense()) > 0.0);
  }
}

TEST_CASE("stiffness rows have bounded nonzeros") {
  Mesh m = generate_mesh(MeshShape::annulus2d, 2);
  SparseMatrix A = assemble_stiffness_full(m, CoefficientField::laplace());
  std::vector<std::set<index_t>> nb(static_cast<std::size_t>(m.num_vertices()));
  for (const auto& el : m.elements())
    for (index_t a : el)
      for (index_t b : el)
        if (a != b) nb[a].insert(b);
  std::size_t degree = 0;
  for (const auto& s : nb) degree = std::max(degree, s.size());
  for (index_t r = 0; r < A.rows(); ++r) CHECK(A.row_cols(r).size() <= degree + 1);
}

TEST_CASE("variable coefficients") {
  Mesh m = generate_mesh(MeshShape::unit_square, 2);
  CoefficientField two = CoefficientField::laplace();
  two.diffusion = [](const Point&) { return Eigen::Matrix3d(2.0 * Eigen::Matrix3d::Identity()); };
  two.alpha_low = two.alpha_high = 2.0;
  const Matrix A1 = assemble_stiffness(m, CoefficientField::laplace()).to_dense();
  CHECK((assemble_stiffness(m, two).to_dense() - 2.0 * A1).norm() < 1e-13);

  CoefficientField react = CoefficientField::laplace();
  react.reaction = [](const Point&) { return 3.0; };
  const Matrix M = assemble_mass(m).to_dense();
  CHECK((assemble_stiffness(m, react).to_dense() - A1 - 3.0 * M).norm() < 1e-13);

  two.check_ellipticity(m, 50);
  CoefficientField wrong = two;
  wrong.alpha_high = 1.5;
  CHECK_THROWS(wrong.check_ellipticity(m, 50));
}

TEST_CASE("no interior degrees of freedom") {
  CHECK_THROWS(assemble_stiffness(generate_mesh(MeshShape::unit_square, 0), CoefficientField::laplace()));
}

TEST_CASE("sparse matrix construction") {
  SparseMatrix S(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, 1.0}, {1, 0, -1.0}, {1, 1, 5.0}});
  CHECK(S.coeff(0, 0) == 3.0);
  CHECK(S.nonzeros() == 2);
  CHECK(S.coeff(1, 0) == 0.0);
  CHECK_THROWS(SparseMatrix(2, 2, {{2, 0, 1.0}}));
  CHECK_THROWS(SparseMatrix(2, 2, {{0, 0, std::nan("")}}));
}

TEST_CASE("mean solve") {
  Mesh m = generate_mesh(MeshShape::unit_square, 3);
  SparseMatrix A = assemble_stiffness(m, CoefficientField::laplace());
  CHECK(solve_mean(A, Vector::Zero(A.rows())).norm() == 0.0);

  Vector f0 = Vector::LinSpaced(5, 1.0, 2.0);
  CHECK((solve_mean(SparseMatrix::identity(5), f0) - f0).norm() < 1e-15);

  const Vector load = assemble_load(m, [](const Point&) { return 1.0; });
  const Vector e = solve_mean(A, load);
  const Vector dense = A.to_dense().lu().solve(load);
  CHECK((e - dense).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((A * e - load).norm() <= 1e-10 * load.norm());
}

TEST_CASE("mean solve converges at second order to a manufactured solution") {
  const double pi = std::numbers::pi;
  auto u = [pi](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  auto f = [&](const Point& x) { return 2.0 * pi * pi * u(x); };
  double prev = 0.0;
  for (int level = 3; level <= 5; ++level) {
    Mesh m = generate_mesh(MeshShape::unit_square, level);
    const Vector e = solve_mean(assemble_stiffness(m, CoefficientField::laplace()), assemble_load(m, f));
    double err = 0.0;
    for (index_t i = 0; i < m.num_dofs(); ++i) err = std::max(err, std::abs(e[i] - u(m.dof_points()[i])));
    if (level > 3) CHECK(prev / err > 3.0);
    prev = err;
  }
}

TEST_CASE("vertex expansion puts zeros on the boundary") {
  Mesh m = generate_mesh(MeshShape::unit_square, 2);
  const Vector v = expand_to_vertices(m, Vector::Ones(m.num_dofs()));
  CHECK(v.size() == m.num_vertices());
  CHECK(v.sum() == doctest::Approx(9.0));
  for (index_t k = 0; k < m.num_vertices(); ++k) CHECK((m.boundary()[k] ? v[k] == 0.0 : v[k] == 1.0));
}
