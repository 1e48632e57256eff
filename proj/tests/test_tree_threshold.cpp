#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "gsbm/tree_threshold.hpp"

using namespace gsbm;
using Catch::Matchers::WithinAbs;

namespace {

SparseParams params(std::size_t r, double a, double b, std::vector<double> mu, std::vector<double> nu,
                    double omega = 1.0) {
  SparseParams p;
  p.r = r;
  p.a = a;
  p.b = b;
  p.mu = std::move(mu);
  p.nu = std::move(nu);
  p.omega = omega;
  return p;
}

// Tree with the root and one revealed child.
TreeInstance one_child(std::uint32_t child_attr, std::uint32_t label) {
  TreeInstance t;
  t.depth_cap = 1;
  t.nodes = {{-1, 0, 0, 0}, {0, 1, child_attr, label}};
  return t;
}

}  // namespace

TEST_CASE("threshold hand cases") {
  SECTION("disjoint labels, r = 2, a = b = 1") {
    const auto th = thresholds(params(2, 1, 1, {1, 0}, {0, 1}));
    CHECK_THAT(th.tau, WithinAbs(0.5, 1e-12));
    CHECK_THAT(th.omega0, WithinAbs(2.0, 1e-12));
    CHECK_THAT(th.omega_c, WithinAbs(2.0, 1e-12));
  }
  SECTION("zero separation") {
    const auto th = thresholds(params(2, 1, 1, {0.3, 0.7}, {0.3, 0.7}));
    CHECK(th.tau == 0.0);
    CHECK(th.degenerate);
    CHECK(th.omega0 == std::numeric_limits<double>::infinity());
  }
  SECTION("r = 2, a = 3, b = 1, single label") {
    const auto th = thresholds(params(2, 3, 1, {1}, {1}));
    CHECK_THAT(th.tau, WithinAbs(0.25, 1e-12));
    CHECK_THAT(th.omega0, WithinAbs(4.0, 1e-12));
    CHECK_THAT(th.omega_c, WithinAbs(2.0, 1e-12));
    CHECK_THAT(*th.epsilon_of_label[0], WithinAbs(0.25, 1e-12));
  }
}

TEST_CASE("offspring mean and label marginal") {
  const auto p = params(3, 4, 1, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, 4.0);
  const auto th = thresholds(p);
  CHECK_THAT(th.offspring_mean, WithinAbs(4.0 * 6.0 / 15.0, 1e-12));
  const auto pl = label_marginal(p);
  CHECK_THAT(pl[0], WithinAbs(2.0 / 6.0, 1e-12));
  CHECK_THAT(pl[1], WithinAbs(3.0 / 6.0, 1e-12));
  CHECK_THAT(pl[2], WithinAbs(1.0 / 6.0, 1e-12));
  CHECK(*th.epsilon_of_label[0] == 0.0);
  CHECK_THAT(*th.epsilon_of_label[2], WithinAbs(0.5, 1e-12));
}

TEST_CASE("labels of zero mass have no epsilon") {
  const auto th = thresholds(params(2, 1, 2, {1, 0}, {1, 0}));
  REQUIRE(th.epsilon_of_label[0].has_value());
  CHECK_FALSE(th.epsilon_of_label[1].has_value());
}

TEST_CASE("invalid sparse parameters") {
  REQUIRE_THROWS(thresholds(params(1, 1, 1, {1}, {1})));
  REQUIRE_THROWS(thresholds(params(2, 0, 1, {1}, {1})));
  REQUIRE_THROWS(thresholds(params(2, 1, 1, {0.5}, {1})));
  REQUIRE_THROWS(thresholds(params(2, 1, 1, {1}, {0.5, 0.5})));
}

TEST_CASE("omega = 0 gives the root alone") {
  const auto t = sample_tree(params(2, 3, 1, {1}, {1}, 0.0), 5, 1);
  CHECK(t.nodes.size() == 1);
}

TEST_CASE("depth-1 size has mean d") {
  const auto p = params(3, 4, 1, {1}, {1}, 4.0);
  const double d = thresholds(p).offspring_mean;
  const int trials = 10000;
  double sum = 0.0;
  for (int k = 0; k < trials; ++k) sum += static_cast<double>(sample_tree(p, 1, k).nodes.size() - 1);
  CHECK(std::abs(sum / trials - d) < 3.0 * std::sqrt(d / trials));
}

TEST_CASE("sampling modes agree on depth-1 statistics") {
  // Chi-square over the (same attribute, label) cells of root-child pairs.
  const auto p = params(3, 4, 1, {0.6, 0.4}, {0.2, 0.8}, 3.0);
  const double rm1 = 2.0;
  const double z = p.a + rm1 * p.b;
  std::vector<double> expected{p.a * 0.6 / z, p.a * 0.4 / z, rm1 * p.b * 0.2 / z, rm1 * p.b * 0.8 / z};
  for (auto mode : {TreeSampling::attribute_first, TreeSampling::label_first}) {
    std::vector<double> counts(4, 0.0);
    double total = 0.0;
    for (std::uint64_t s = 0; total < 1e5; ++s) {
      const auto t = sample_tree(p, 1, s, mode);
      for (std::size_t v = 1; v < t.nodes.size(); ++v) {
        const bool same = t.nodes[v].attribute == t.nodes[0].attribute;
        counts[(same ? 0 : 2) + t.nodes[v].label] += 1.0;
        total += 1.0;
      }
    }
    double chi2 = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      const double e = expected[c] * total;
      chi2 += (counts[c] - e) * (counts[c] - e) / e;
    }
    CHECK(chi2 < 16.27);  // 99.9% quantile with 3 degrees of freedom
  }
}

TEST_CASE("edge labels in sampled trees follow P(l)") {
  const auto p = params(2, 3, 1, {0.7, 0.3}, {0.1, 0.9}, 3.0);
  const auto pl = label_marginal(p);
  double first = 0.0, total = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto t = sample_tree(p, 4, s);
    for (std::size_t v = 1; v < t.nodes.size(); ++v) {
      first += t.nodes[v].label == 0 ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  CHECK(std::abs(first / total - pl[0]) < 4.0 * std::sqrt(pl[0] * (1 - pl[0]) / total));
}

TEST_CASE("posterior with no evidence is uniform") {
  const auto p = params(3, 4, 1, {1}, {1}, 4.0);
  const auto t = sample_tree(p, 3, 5);
  const auto post = root_posterior(t, p, Conditioning::leaves_only, 0);
  for (double v : post) CHECK_THAT(v, WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("one revealed child gives 1 - (r - 1) eps") {
  const auto p = params(3, 4, 1, {1}, {1});
  const double eps = *thresholds(p).epsilon_of_label[0];
  const auto post = root_posterior(one_child(2, 0), p);
  CHECK_THAT(post[2], WithinAbs(1.0 - 2.0 * eps, 1e-12));
  CHECK_THAT(post[0], WithinAbs(eps, 1e-12));
  CHECK_THAT(post[0] + post[1] + post[2], WithinAbs(1.0, 1e-12));
}

TEST_CASE("symmetric parameters keep the posterior uniform") {
  const auto p = params(3, 2, 2, {0.4, 0.6}, {0.4, 0.6}, 5.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = sample_tree(p, 4, s);
    for (auto cond : {Conditioning::leaves_only, Conditioning::full_path}) {
      const auto post = root_posterior(t, p, cond);
      for (double v : post) CHECK_THAT(v, WithinAbs(1.0 / 3.0, 1e-12));
    }
  }
}

TEST_CASE("disjoint labels make the channel noiseless") {
  const auto p = params(2, 1, 1, {1, 0}, {0, 1}, 4.0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto t = sample_tree(p, 3, s);
    bool has_leaf = false;
    for (const auto& nd : t.nodes) has_leaf = has_leaf || nd.depth == 3;
    const auto post = root_posterior(t, p);
    if (has_leaf) {
      CHECK_THAT(post[t.root().attribute], WithinAbs(1.0, 1e-12));
    } else {
      CHECK_THAT(post[0], WithinAbs(0.5, 1e-12));
    }
  }
}

TEST_CASE("posterior against brute-force enumeration") {
  // Sum over every assignment of the hidden attributes.
  const auto p = params(3, 3, 1, {0.5, 0.5}, {0.2, 0.8}, 2.0);
  const auto th = thresholds(p);
  TreeInstance t;
  t.depth_cap = 2;
  t.nodes = {{-1, 0, 0, 0}, {0, 1, 1, 0}, {0, 1, 0, 1}, {1, 2, 2, 1}, {1, 2, 1, 0}, {2, 2, 0, 0}};
  auto channel = [&](std::size_t x, std::size_t y, std::uint32_t label) {
    const double eps = *th.epsilon_of_label[label];
    return x == y ? 1.0 - 2.0 * eps : eps;
  };
  std::vector<double> brute(3, 0.0);
  for (std::size_t root = 0; root < 3; ++root)
    for (std::size_t h1 = 0; h1 < 3; ++h1)
      for (std::size_t h2 = 0; h2 < 3; ++h2) {
        double w = channel(root, h1, t.nodes[1].label) * channel(root, h2, t.nodes[2].label);
        w *= channel(h1, t.nodes[3].attribute, t.nodes[3].label);
        w *= channel(h1, t.nodes[4].attribute, t.nodes[4].label);
        w *= channel(h2, t.nodes[5].attribute, t.nodes[5].label);
        brute[root] += w;
      }
  const double z = brute[0] + brute[1] + brute[2];
  const auto post = root_posterior(t, p);
  for (std::size_t x = 0; x < 3; ++x) CHECK_THAT(post[x], WithinAbs(brute[x] / z, 1e-12));
}

TEST_CASE("malformed trees are rejected") {
  const auto p = params(2, 3, 1, {1}, {1});
  TreeInstance t = one_child(1, 0);
  t.nodes[1].parent = 5;
  REQUIRE_THROWS(root_posterior(t, p));
  t = one_child(4, 0);
  REQUIRE_THROWS(root_posterior(t, p));
  t = one_child(1, 3);
  REQUIRE_THROWS(root_posterior(t, p));
  t.nodes.clear();
  REQUIRE_THROWS(root_posterior(t, p));
}

TEST_CASE("tree caps") {
  const auto p = params(2, 3, 1, {1}, {1}, 8.0);
  REQUIRE_THROWS(sample_tree(p, 31, 1));
  const auto t = sample_tree(p, 20, 1, TreeSampling::attribute_first, 1000);
  CHECK(t.truncated);
  CHECK(t.nodes.size() == 1000);
}

TEST_CASE("coupling with zero separation dies at once") {
  const auto p = params(2, 1, 1, {0.5, 0.5}, {0.5, 0.5}, 6.0);
  for (std::uint32_t depth : {1u, 3u, 10u}) CHECK(coupling_survival(p, depth, 500, 2).estimate == 0.0);
  CHECK(coupling_survival(p, 0, 10, 2).estimate == 1.0);
}

TEST_CASE("Wilson interval") {
  const auto e = wilson_interval(50, 100);
  CHECK(e.estimate == 0.5);
  CHECK_THAT(e.ci_lo, WithinAbs(0.4038, 1e-4));
  CHECK_THAT(e.ci_hi, WithinAbs(0.5962, 1e-4));
  CHECK_THAT(wilson_interval(0, 100).ci_lo, WithinAbs(0.0, 1e-15));
}

TEST_CASE("posterior deviation reuses trees across depths") {
  const auto p = params(2, 3, 1, {1}, {1}, 3.2);
  const auto a = posterior_deviation(p, {2, 6}, 200, 3);
  const auto b = posterior_deviation(p, {6}, 200, 3);
  CHECK(a[1].mean == b[0].mean);
  CHECK(a[0].mean > a[1].mean);
}
