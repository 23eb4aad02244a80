#include "hcorr/lowrank.hpp"

#include <doctest.h>

#include "helpers.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace hcorr;

namespace {

Matrix gaussian(index_t m, index_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix M(m, n);
  for (index_t j = 0; j < n; ++j)
    for (index_t i = 0; i < m; ++i) M(i, j) = g(rng);
  return M;
}

double gauss_kernel(double x, double y, double ell) { return std::exp(-0.5 * (x - y) * (x - y) / (ell * ell)); }

}  // namespace

TEST_CASE("truncate rank zero") {
  RkMatrix R = RkMatrix::zero(7, 5);
  RkMatrix T = truncate(R, 1e-8, 10);
  CHECK(T.rank() == 0);
  CHECK(T.rows() == 7);
  CHECK(T.cols() == 5);
}

TEST_CASE("truncate keeps a unit rank-one block") {
  Matrix e1 = Matrix::Zero(6, 1);
  e1(0, 0) = 1.0;
  RkMatrix R(e1, e1);
  RkMatrix T = truncate(R, 1e-12, 4);
  CHECK(T.rank() == 1);
  CHECK((T.to_dense() - R.to_dense()).norm() <= 1e-12);
}

TEST_CASE("truncation error matches the dropped singular values") {
  RkMatrix R(gaussian(20, 8, 1), gaussian(20, 8, 2));
  const Matrix D = R.to_dense();
  Eigen::JacobiSVD<Matrix> svd(D);
  const Vector s = svd.singularValues();
  double dropped = 0.0;
  for (index_t i = 4; i < s.size(); ++i) dropped += s(i) * s(i);
  dropped = std::sqrt(dropped);

  double reported = -1.0;
  RkMatrix T = truncate(R, 1e-14, 4, &reported);
  CHECK(T.rank() == 4);
  CHECK(std::abs((D - T.to_dense()).norm() - dropped) <= 1e-10);
  CHECK(std::abs(reported - dropped) <= 1e-10);
}

TEST_CASE("truncation by relative tolerance") {
  // singular values 1, 1e-3, 1e-6, 1e-9
  Matrix Q = gaussian(12, 4, 3).householderQr().householderQ() * Matrix::Identity(12, 4);
  Matrix P = gaussian(9, 4, 4).householderQr().householderQ() * Matrix::Identity(9, 4);
  Vector s(4);
  s << 1.0, 1e-3, 1e-6, 1e-9;
  RkMatrix R(Q * s.asDiagonal(), P);
  CHECK(truncate(R, 1e-2, 10).rank() == 1);
  CHECK(truncate(R, 1e-4, 10).rank() == 2);
  CHECK(truncate(R, 1e-7, 10).rank() == 3);
  CHECK(truncate(R, 1e-12, 10).rank() == 4);
  CHECK(truncate(R, 0.0, 10).rank() == 4);
  CHECK(truncate(R, 1e-12, 2).rank() == 2);
}

TEST_CASE("truncate is a projection") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RkMatrix R(gaussian(15, 9, 10 + seed), gaussian(11, 9, 30 + seed));
    R.U.col(0) *= 1e3;
    RkMatrix T1 = truncate(R, 1e-2, 6);
    RkMatrix T2 = truncate(T1, 1e-2, 6);
    CHECK(T2.rank() == T1.rank());
    CHECK((T1.to_dense() - T2.to_dense()).norm() <= 1e-13 * T1.to_dense().norm());
  }
}

TEST_CASE("truncate never exceeds min dimension") {
  RkMatrix R(gaussian(3, 10, 5), gaussian(50, 10, 6));
  RkMatrix T = truncate(R, 0.0, 100);
  CHECK(T.rank() <= 3);
  CHECK(testing::rel_error(T.to_dense(), R.to_dense()) <= 1e-13);
}

TEST_CASE("compress_dense") {
  Matrix M = gaussian(10, 3, 7) * gaussian(3, 8, 8);
  RkMatrix R = compress_dense(M, 1e-12, 10);
  CHECK(R.rank() == 3);
  CHECK(testing::rel_error(R.to_dense(), M) <= 1e-12);
  CHECK(compress_dense(Matrix::Zero(4, 4), 1e-8, 4).rank() == 0);
}

TEST_CASE("frobenius norm of a factorized block") {
  RkMatrix R(gaussian(13, 5, 9), gaussian(7, 5, 10));
  CHECK(std::abs(R.frobenius_norm() - R.to_dense().norm()) <= 1e-12 * R.to_dense().norm());
  CHECK(RkMatrix::zero(3, 3).frobenius_norm() == 0.0);
  CHECK_THROWS_AS(RkMatrix(Matrix::Zero(3, 2), Matrix::Zero(3, 1)), Error);
}

TEST_CASE("ACA on an exact rank-one generator") {
  Vector a = Vector::LinSpaced(9, 1.0, 3.0), b = Vector::LinSpaced(7, -2.0, 5.0);
  AcaResult r = aca([&](index_t i, index_t j) { return a(i) * b(j); }, 9, 7, 1e-10, 20);
  CHECK(r.approx.rank() == 1);
  // the residual vanishes before the stopping test can fire
  CHECK(r.stagnated);
  CHECK((r.approx.to_dense() - a * b.transpose()).norm() <= 1e-14 * (a * b.transpose()).norm());
}

TEST_CASE("ACA on a zero generator") {
  AcaResult r = aca([](index_t, index_t) { return 0.0; }, 8, 6, 1e-8, 10);
  CHECK(r.approx.rank() == 0);
  CHECK(r.approx.rows() == 8);
  CHECK(r.approx.cols() == 6);
}

TEST_CASE("ACA on a Gaussian block between separated intervals") {
  const int n = 16;
  auto x = [&](index_t i) { return i / double(n - 1); };
  auto y = [&](index_t j) { return 3.0 + j / double(n - 1); };
  EntryFn g = [&](index_t i, index_t j) { return gauss_kernel(x(i), y(j), 1.0); };
  Matrix D(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) D(i, j) = g(i, j);

  AcaResult r = aca(g, n, n, 1e-8, 20);
  CHECK(r.approx.rank() <= 10);
  CHECK((r.approx.to_dense() - D).norm() <= 1e-6 * D.norm());
  CHECK(r.entries_evaluated < n * n);

  // error decays exponentially with the rank
  std::vector<double> ranks, logs;
  for (index_t k = 1; k <= 6; ++k) {
    AcaResult rk = aca(g, n, n, 1e-15, k);
    const double e = (rk.approx.to_dense() - D).norm() / D.norm();
    if (e <= 0.0) break;
    ranks.push_back(double(k));
    logs.push_back(std::log(e));
  }
  REQUIRE(ranks.size() >= 3);
  const double mr = std::accumulate(ranks.begin(), ranks.end(), 0.0) / ranks.size();
  const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    num += (ranks[i] - mr) * (logs[i] - ml);
    den += (ranks[i] - mr) * (ranks[i] - mr);
  }
  CHECK(num / den < -1.0);
}

TEST_CASE("ACA respects the rank cap") {
  Matrix M = gaussian(30, 30, 12);
  AcaResult r = aca(testing::dense_entries(M), 30, 30, 1e-12, 5);
  CHECK(r.approx.rank() == 5);
}

TEST_CASE("ACA flags breakdown on a block with a zero leading row") {
  // rows 0..2 vanish, the rest is rank one: the start row yields nothing
  Matrix M = Matrix::Zero(6, 4);
  M.bottomRows(3).setOnes();
  AcaResult r = aca(testing::dense_entries(M), 6, 4, 1e-10, 4);
  if (r.approx.rank() == 0) {
    CHECK(r.stagnated == false);
  } else {
    CHECK((r.approx.to_dense() - M).norm() <= 1e-12);
  }
}

TEST_CASE("pivoted Cholesky of the identity") {
  Vector d = Vector::Ones(5);
  auto r = pivoted_cholesky(d, [](index_t i, index_t j) { return i == j ? 1.0 : 0.0; }, 1e-12, 10);
  CHECK(r.L.cols() == 5);
  CHECK((r.L * r.L.transpose() - Matrix::Identity(5, 5)).norm() <= 1e-14);
  for (index_t j = 0; j < 5; ++j) CHECK(r.L.col(j).cwiseAbs().sum() == doctest::Approx(1.0));
  CHECK(r.trace_error <= 1e-12);
}

TEST_CASE("pivoted Cholesky of a rank-one matrix") {
  Vector v = Vector::LinSpaced(8, 0.5, 2.0);
  Matrix M = v * v.transpose();
  auto r = pivoted_cholesky(M.diagonal(), testing::dense_entries(M), 1e-12, 8);
  CHECK(r.L.cols() == 1);
  CHECK((r.L * r.L.transpose() - M).norm() <= 1e-13 * M.norm());
}

TEST_CASE("pivoted Cholesky rejects indefinite input") {
  Vector d(3);
  d << 1.0, -1.0, 2.0;
  CHECK_THROWS_AS(pivoted_cholesky(d, [](index_t, index_t) { return 0.0; }, 1e-8, 3), NumericalError);
  Matrix M(2, 2);
  M << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(pivoted_cholesky(M.diagonal(), testing::dense_entries(M), 1e-12, 2), NumericalError);
}

TEST_CASE("pivoted Cholesky on Gaussian kernel matrices") {
  const auto pts = testing::grid_points(10);
  const double diam = std::sqrt(2.0);
  auto kernel_matrix = [&](double ell) {
    Matrix M(100, 100);
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) {
        const double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
        M(i, j) = std::exp(-0.5 * (dx * dx + dy * dy) / (ell * ell));
      }
    return M;
  };
  index_t previous = 0;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    const Matrix M = kernel_matrix(diam / f);
    auto r = pivoted_cholesky(M.diagonal(), testing::dense_entries(M), 1e-6, 100);
    for (std::size_t k = 1; k < r.trace_history.size(); ++k)
      CHECK(r.trace_history[k] <= r.trace_history[k - 1] + 1e-14);
    CHECK(r.trace_error <= 1e-6);
    // trace of the remainder computed densely
    CHECK(std::abs((M - r.L * r.L.transpose()).trace() - r.trace_error) <= 1e-9);
    // remainder is PSD, so its spectral norm is bounded by its trace
    Eigen::SelfAdjointEigenSolver<Matrix> es(M - r.L * r.L.transpose());
    CHECK(es.eigenvalues().maxCoeff() <= r.trace_error + 1e-10);
    if (f == 1.0) CHECK(r.L.cols() <= 25);
    CHECK(r.L.cols() >= previous);
    previous = r.L.cols();
  }
  CHECK(previous > 25);
}
