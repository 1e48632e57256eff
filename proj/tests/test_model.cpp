#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gsbm/model.hpp"

using namespace gsbm;
using Catch::Matchers::WithinAbs;

namespace {

// Cosine coefficient 2 int_{-1/2}^{1/2} g(x) cos(2 pi k x) dx by the midpoint rule.
double numeric_coefficient(const FourierKernel& g, std::size_t k, std::size_t m = 200000) {
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double x = -0.5 + (static_cast<double>(a) + 0.5) / static_cast<double>(m);
    acc += g(x) * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * x);
  }
  acc /= static_cast<double>(m);
  return k == 0 ? acc : 2.0 * acc;
}

ModelSpec circle_model(std::size_t n, double retention) {
  ModelSpec s;
  s.n = n;
  s.kernel = FourierKernel::absolute_value();
  s.omega = retention * static_cast<double>(n);
  return s;
}

}  // namespace

TEST_CASE("closed-form Fourier coefficients match quadrature") {
  const auto abs_k = FourierKernel::absolute_value();
  const auto ind_k = FourierKernel::quarter_indicator();
  for (std::size_t k = 0; k <= 6; ++k) {
    CHECK_THAT(abs_k.coefficient(k), WithinAbs(numeric_coefficient(abs_k, k), 1e-8));
    CHECK_THAT(ind_k.coefficient(k), WithinAbs(numeric_coefficient(ind_k, k), 1e-4));
  }
  CHECK(abs_k.coefficient(0) == 0.25);
  CHECK_THAT(abs_k.coefficient(1), WithinAbs(-2.0 / (std::numbers::pi * std::numbers::pi), 1e-15));
  CHECK(ind_k.coefficient(0) == 0.5);
}

TEST_CASE("Fourier profiles are even and periodic") {
  const auto g = FourierKernel::absolute_value();
  CHECK(g(0.3) == Catch::Approx(g(-0.3)));
  CHECK(g(0.3) == Catch::Approx(g(1.3)));
  CHECK(g(0.75) == Catch::Approx(0.25));
  const auto s = FourierKernel::series(0.5, {0.25});
  CHECK_THAT(s(0.0), WithinAbs(0.75, 1e-15));
  CHECK_THAT(s(0.5), WithinAbs(0.25, 1e-15));
}

TEST_CASE("model validation reports violated invariants") {
  auto s = circle_model(100, 0.5);
  REQUIRE_NOTHROW(s.validate());

  auto too_dense = s;
  too_dense.omega = 150.0;
  REQUIRE_THROWS_AS(too_dense.validate(), std::invalid_argument);

  ModelSpec block;
  block.n = 10;
  block.space = FiniteSet{{0.5, 0.5}};
  Eigen::MatrixXd b(2, 2);
  b << 0.5, 0.1, 0.2, 0.5;
  block.kernel = BlockKernel::unlabeled(b);
  block.omega = 1.0;
  REQUIRE_THROWS_AS(block.validate(), std::invalid_argument);

  ModelSpec bad_prob = block;
  b(1, 0) = 0.1;
  bad_prob.kernel = BlockKernel::unlabeled(b);
  bad_prob.space = FiniteSet{{0.5, 0.6}};
  REQUIRE_THROWS_AS(bad_prob.validate(), std::invalid_argument);

  ModelSpec wrong_space = s;
  wrong_space.space = FiniteSet{{1.0}};
  REQUIRE_THROWS_AS(wrong_space.validate(), std::invalid_argument);

  ModelSpec pm = s;
  pm.kernel = FourierKernel::quarter_indicator(LabelRule::plus_minus);
  pm.alphabet = LabelAlphabet({"+1", "-1"});
  REQUIRE_THROWS_AS(pm.validate(), std::invalid_argument);  // 2 g = 2 on the support

  ModelSpec pm_ok = s;
  pm_ok.kernel = FourierKernel::absolute_value(LabelRule::plus_minus);
  REQUIRE_THROWS_AS(pm_ok.validate(), std::invalid_argument);  // alphabet has one label
  pm_ok.alphabet = LabelAlphabet({"+1", "-1"});
  REQUIRE_NOTHROW(pm_ok.validate());
}

TEST_CASE("omega = 0 gives an empty graph") {
  auto s = circle_model(50, 0.0);
  const auto g = generate_graph(s, sample_attributes(s, 1), 1);
  REQUIRE(g.edges.empty());
}

TEST_CASE("generation is deterministic and well formed") {
  auto s = circle_model(200, 0.5);
  const auto attrs = sample_attributes(s, 9);
  const auto g1 = generate_graph(s, attrs, 9);
  const auto g2 = generate_graph(s, attrs, 9);
  REQUIRE(g1 == g2);
  REQUIRE_NOTHROW(g1.validate());
  const auto g3 = generate_graph(s, attrs, 10);
  REQUIRE_FALSE(g1.edges == g3.edges);
}

TEST_CASE("edge counts agree with the Bernoulli oracle") {
  // Monte-Carlo over 100 generations with fixed attributes: the mean edge count lies
  // within 3 standard errors of the exact expectation, and the spread matches the
  // exact variance within 25%.
  auto s = circle_model(300, 0.6);
  const auto attrs = sample_attributes(s, 3);
  const auto mom = edge_count_moments(s, attrs);
  const int runs = 100;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < runs; ++k) {
    const double e = static_cast<double>(generate_graph(s, attrs, 1000 + k).edges.size());
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / runs;
  const double var = (sum_sq - runs * mean * mean) / (runs - 1);
  CHECK(std::abs(mean - mom.mean) < 3.0 * std::sqrt(mom.variance / runs));
  CHECK(var / mom.variance == Catch::Approx(1.0).margin(0.25));
  // Unconditional expectation 0.6 * (1/4) * n (n - 1) / 2 with an attribute-driven slack.
  CHECK(mom.mean == Catch::Approx(0.6 * 0.25 * 300.0 * 299.0 / 2.0).epsilon(0.05));
}

TEST_CASE("desk-scale edge count for the circle model") {
  auto s = circle_model(1500, 0.6);
  const auto attrs = sample_attributes(s, 5);
  const auto mom = edge_count_moments(s, attrs);
  const auto g = generate_graph(s, attrs, 5);
  CHECK(std::abs(static_cast<double>(g.edges.size()) - mom.mean) < 3.0 * std::sqrt(mom.variance));
  CHECK(mom.mean == Catch::Approx(168637.5).epsilon(0.02));
}

TEST_CASE("plus/minus labels follow mu(+1) = 2 g") {
  // P(+1 | edge) = E[2 g^2] / E[g] = 2 (1/12) / (1/4) = 2/3 for g = |x|.
  auto s = circle_model(1200, 0.5);
  s.kernel = FourierKernel::absolute_value(LabelRule::plus_minus);
  s.alphabet = LabelAlphabet({"+1", "-1"});
  const auto g = generate_graph(s, sample_attributes(s, 4), 4);
  double plus = 0.0;
  for (const auto& e : g.edges) plus += e.label == 0 ? 1.0 : 0.0;
  const double frac = plus / static_cast<double>(g.edges.size());
  const double se = std::sqrt(2.0 / 9.0 / static_cast<double>(g.edges.size()));
  CHECK(std::abs(frac - 2.0 / 3.0) < 4.0 * se + 0.01);
}

TEST_CASE("finite attribute spaces sample class indices") {
  ModelSpec s;
  s.n = 4000;
  s.space = FiniteSet{{0.25, 0.75}};
  Eigen::MatrixXd b(2, 2);
  b << 0.9, 0.1, 0.1, 0.9;
  s.kernel = BlockKernel::unlabeled(b);
  s.omega = 100.0;
  const auto attrs = sample_attributes(s, 2);
  double ones = 0.0;
  for (double a : attrs) {
    REQUIRE((a == 0.0 || a == 1.0));
    ones += a;
  }
  CHECK(ones / 4000.0 == Catch::Approx(0.75).margin(0.03));
}

TEST_CASE("identifiability of block kernels") {
  ModelSpec s;
  s.n = 10;
  s.space = FiniteSet{{0.5, 0.5}};
  s.omega = 1.0;
  Eigen::MatrixXd b(2, 2);
  b << 0.5, 0.5, 0.5, 0.5;
  s.kernel = BlockKernel::unlabeled(b);
  auto rep = check_identifiability(s);
  REQUIRE(rep.checked);
  CHECK_FALSE(rep.identifiable);

  // Same B, labels separate the classes: 0.5 * (|1 - 0| + |0 - 1|) summed over y.
  BlockKernel labeled{b, {{1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}};
  s.kernel = labeled;
  s.alphabet = LabelAlphabet({"a", "b"});
  rep = check_identifiability(s);
  CHECK(rep.identifiable);
  CHECK_THAT(rep.min_separation, WithinAbs(1.0, 1e-12));

  ModelSpec circle = circle_model(10, 0.5);
  CHECK_FALSE(check_identifiability(circle).checked);
}
