#include <catch_amalgamated.hpp>

#include <random>

#include "gsbm/eigensolver.hpp"

using namespace gsbm;

namespace {

SparseMatrix random_symmetric(Eigen::Index n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (u(rng) < density) {
        const double v = 2.0 * u(rng) - 0.5;
        t.emplace_back(i, j, v);
        t.emplace_back(j, i, v);
      }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// Largest principal angle between the column spans of two orthonormal bases.
double principal_angle(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.transpose() * v);
  const double smallest = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, smallest));
}

}  // namespace

TEST_CASE("dense eigenpairs are ordered by magnitude") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a.diagonal() << 1.0, -3.0, 2.0, 3.0;
  const auto p = dense_eigenpairs(a, 4, 4);
  REQUIRE(p.values == std::vector<double>{3.0, -3.0, 2.0, 1.0});
  CHECK(p.vectors(3, 0) == 1.0);
  CHECK(std::abs(p.vectors(1, 1)) == 1.0);
}

TEST_CASE("canonical sign makes the largest entry positive") {
  Eigen::VectorXd v(3);
  v << 0.1, -0.9, 0.2;
  detail::canonical_sign(v);
  CHECK(v[1] == 0.9);
}

TEST_CASE("Lanczos agrees with the dense solver") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto a = random_symmetric(300, 0.05, seed);
    EigenOptions opts;
    opts.tol = 1e-12;
    opts.seed = seed;
    const auto it = lanczos_eigenpairs(a, 5, 4, opts);
    const auto dn = dense_eigenpairs(Eigen::MatrixXd(a), 5, 4);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(it.values[k] - dn.values[k]) < 1e-8);
    CHECK(principal_angle(it.vectors, dn.vectors) < 1e-5);
    CHECK(it.max_residual < 1e-6);
  }
}

TEST_CASE("Lanczos handles matrices smaller than its Krylov space") {
  const auto a = random_symmetric(20, 0.3, 4);
  EigenOptions opts;
  opts.method = EigenMethod::lanczos;
  const auto it = leading_eigenpairs(a, 4, 4, opts);
  const auto dn = dense_eigenpairs(Eigen::MatrixXd(a), 4, 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(it.values[k] - dn.values[k]) < 1e-8);
}

TEST_CASE("Lanczos reports exhaustion of its budget") {
  const auto a = random_symmetric(400, 0.05, 2);
  EigenOptions opts;
  opts.tol = 1e-14;
  opts.max_matvecs = 5;
  REQUIRE_THROWS_AS(lanczos_eigenpairs(a, 4, 4, opts), ConvergenceError);
}

TEST_CASE("eigenvalue requests are checked") {
  const auto a = random_symmetric(10, 0.5, 1);
  REQUIRE_THROWS_AS(leading_eigenpairs(a, 0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(leading_eigenpairs(a, 11, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(leading_eigenpairs(a, 2, 3), std::invalid_argument);
}

TEST_CASE("default budget is 50 r log n products") {
  CHECK(detail::default_budget(1000, 3) == static_cast<std::size_t>(std::ceil(150.0 * std::log(1000.0))));
}
