#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsbm/random.hpp"

namespace gsbm {

/// Symmetric sparse-regime model on {0, ..., r-1}: same-attribute pairs connect with weight a
/// and carry labels from mu, different-attribute pairs use b and nu.
struct SparseParams {
  std::size_t r = 2;
  double a = 1.0;
  double b = 1.0;
  std::vector<double> mu{1.0};
  std::vector<double> nu{1.0};
  double omega = 1.0;

  std::size_t labels() const { return mu.size(); }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (r < 2) fail("sparse model needs r >= 2");
    if (!(a > 0.0) || !(b > 0.0)) fail("a and b must be positive");
    if (!(omega >= 0.0) || !std::isfinite(omega)) fail("omega must be nonnegative");
    if (mu.empty() || mu.size() != nu.size()) fail("mu and nu must share a nonempty alphabet");
    for (const auto* p : {&mu, &nu}) {
      double s = 0.0;
      for (double v : *p) {
        if (!(v >= 0.0)) fail("label laws must be nonnegative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) fail("label laws must sum to 1");
    }
  }
};

struct ThresholdReport {
  double tau = 0.0;
  double omega0 = 0.0;  ///< 1 / tau, +inf when tau = 0
  double omega_c = 0.0;
  double branching_number = 0.0;  ///< omega * tau
  double offspring_mean = 0.0;    ///< d = omega (a + (r-1) b) / (r (a + b))
  bool degenerate = false;        ///< tau = 0
  /// eps(l) = b nu(l) / (a mu(l) + (r-1) b nu(l)); absent for labels of zero mass.
  std::vector<std::optional<double>> epsilon_of_label;
};

/// P(l) = (a mu(l) + (r-1) b nu(l)) / (a + (r-1) b): label law of a tree edge.
inline std::vector<double> label_marginal(const SparseParams& p) {
  const double rm1 = static_cast<double>(p.r - 1);
  const double z = p.a + rm1 * p.b;
  std::vector<double> out(p.labels());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = (p.a * p.mu[l] + rm1 * p.b * p.nu[l]) / z;
  return out;
}

inline ThresholdReport thresholds(const SparseParams& p) {
  p.validate();
  const double r = static_cast<double>(p.r);
  ThresholdReport rep;
  double sep = 0.0;
  for (std::size_t l = 0; l < p.labels(); ++l) sep += std::abs(p.a * p.mu[l] - p.b * p.nu[l]);
  rep.tau = sep / (r * (p.a + p.b));
  rep.degenerate = rep.tau == 0.0;
  rep.omega0 = rep.degenerate ? std::numeric_limits<double>::infinity() : 1.0 / rep.tau;
  rep.omega_c = r * (p.a + p.b) / (p.a + (r - 1.0) * p.b);
  rep.branching_number = p.omega * rep.tau;
  rep.offspring_mean = p.omega * (p.a + (r - 1.0) * p.b) / (r * (p.a + p.b));
  for (std::size_t l = 0; l < p.labels(); ++l) {
    const double mass = p.a * p.mu[l] + (r - 1.0) * p.b * p.nu[l];
    if (mass > 0.0) rep.epsilon_of_label.emplace_back(p.b * p.nu[l] / mass);
    else rep.epsilon_of_label.emplace_back(std::nullopt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Labeled Galton-Watson trees
// ---------------------------------------------------------------------------

struct TreeNode {
  std::int64_t parent = -1;  ///< -1 for the root
  std::uint32_t depth = 0;
  std::uint32_t attribute = 0;
  std::uint32_t label = 0;  ///< label of the edge to the parent; unused at the root
};

/// Nodes in breadth-first order, root first.
struct TreeInstance {
  std::vector<TreeNode> nodes;
  std::uint32_t depth_cap = 0;
  bool truncated = false;  ///< node cap reached before depth_cap

  const TreeNode& root() const { return nodes.front(); }
};

enum class TreeSampling {
  attribute_first,  ///< attribute flip from (a, b), then label from mu or nu
  label_first,      ///< label from P(l), then attribute flip with probability (r-1) eps(l)
};

inline constexpr std::uint32_t kMaxTreeDepth = 30;
inline constexpr std::size_t kMaxTreeNodes = 10'000'000;

namespace detail {

inline std::uint32_t other_attribute(std::uint32_t parent, std::size_t r, Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(r - 2));
  const std::uint32_t v = pick(rng);
  return v >= parent ? v + 1 : v;
}

inline std::uint32_t draw_index(const std::vector<double>& law, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t l = 0; l + 1 < law.size(); ++l) {
    acc += law[l];
    if (u < acc) return static_cast<std::uint32_t>(l);
  }
  // Skip trailing zero-mass entries.
  std::size_t last = law.size() - 1;
  while (last > 0 && law[last] == 0.0) --last;
  return static_cast<std::uint32_t>(last);
}

}  // namespace detail

/// Galton-Watson tree with Poisson(d) offspring, grown to depth `depth`.
inline TreeInstance sample_tree(const SparseParams& p, std::uint32_t depth, std::uint64_t seed,
                                TreeSampling mode = TreeSampling::attribute_first,
                                std::size_t node_cap = kMaxTreeNodes) {
  const ThresholdReport th = thresholds(p);
  if (depth > kMaxTreeDepth) throw std::invalid_argument("tree depth is capped at 30");
  Rng rng = make_rng(seed, Stream::tree);
  const double rm1 = static_cast<double>(p.r - 1);
  const double same_prob = p.a / (p.a + rm1 * p.b);
  const auto marginal = label_marginal(p);
  std::poisson_distribution<std::size_t> offspring(th.offspring_mean > 0.0 ? th.offspring_mean : 1.0);

  TreeInstance t;
  t.depth_cap = depth;
  std::uniform_int_distribution<std::uint32_t> root_pick(0, static_cast<std::uint32_t>(p.r - 1));
  t.nodes.push_back({-1, 0, root_pick(rng), 0});
  if (th.offspring_mean == 0.0) return t;

  for (std::size_t v = 0; v < t.nodes.size(); ++v) {
    const TreeNode parent = t.nodes[v];
    if (parent.depth >= depth) break;  // breadth-first: all later nodes are as deep
    const std::size_t kids = offspring(rng);
    for (std::size_t c = 0; c < kids; ++c) {
      if (t.nodes.size() >= node_cap) {
        t.truncated = true;
        return t;
      }
      TreeNode child{static_cast<std::int64_t>(v), parent.depth + 1, parent.attribute, 0};
      if (mode == TreeSampling::attribute_first) {
        const bool same = uniform01(rng) < same_prob;
        if (!same) child.attribute = detail::other_attribute(parent.attribute, p.r, rng);
        child.label = detail::draw_index(same ? p.mu : p.nu, rng);
      } else {
        child.label = detail::draw_index(marginal, rng);
        const double eps = *th.epsilon_of_label[child.label];
        if (uniform01(rng) >= 1.0 - rm1 * eps)
          child.attribute = detail::other_attribute(parent.attribute, p.r, rng);
      }
      t.nodes.push_back(child);
    }
  }
  return t;
}

enum class Conditioning {
  leaves_only,  ///< attributes revealed at the reveal depth only
  full_path,    ///< attributes revealed at every non-root node up to the reveal depth
};

/// Exact posterior of the root attribute given the tree shape, every edge label, and the
/// revealed attributes, by upward sum-product. Nodes deeper than `reveal_depth` (default: the
/// tree's depth cap) are ignored.
inline std::vector<double> root_posterior(const TreeInstance& t, const SparseParams& p,
                                          Conditioning cond = Conditioning::leaves_only,
                                          std::optional<std::uint32_t> reveal_depth = {}) {
  const ThresholdReport th = thresholds(p);
  const std::size_t r = p.r;
  const std::uint32_t depth = reveal_depth.value_or(t.depth_cap);
  if (t.nodes.empty() || t.nodes.front().parent != -1 || t.nodes.front().depth != 0)
    throw std::invalid_argument("malformed tree: missing root");
  for (std::size_t v = 1; v < t.nodes.size(); ++v) {
    const TreeNode& nd = t.nodes[v];
    if (nd.parent < 0 || static_cast<std::size_t>(nd.parent) >= v ||
        t.nodes[static_cast<std::size_t>(nd.parent)].depth + 1 != nd.depth)
      throw std::invalid_argument("malformed tree: bad parent link");
    if (nd.attribute >= r) throw std::invalid_argument("malformed tree: attribute out of range");
    if (nd.label >= p.labels() || !th.epsilon_of_label[nd.label])
      throw std::invalid_argument("malformed tree: label of zero probability");
  }

  std::vector<double> msg(t.nodes.size() * r, 1.0);
  auto at = [&](std::size_t v) { return msg.data() + v * r; };

  for (std::size_t v = t.nodes.size(); v-- > 1;) {
    const TreeNode& nd = t.nodes[v];
    if (nd.depth > depth) continue;
    double* m = at(v);
    const bool revealed = nd.depth == depth || cond == Conditioning::full_path;
    if (revealed)
      for (std::size_t x = 0; x < r; ++x) m[x] = x == nd.attribute ? 1.0 : 0.0;
    // Channel to the parent: stay with 1 - (r-1) eps, move to each other value with eps.
    const double eps = *th.epsilon_of_label[nd.label];
    double total = 0.0;
    for (std::size_t x = 0; x < r; ++x) total += m[x];
    double* pm = at(static_cast<std::size_t>(nd.parent));
    double norm = 0.0;
    for (std::size_t x = 0; x < r; ++x) {
      pm[x] *= eps * total + (1.0 - static_cast<double>(r) * eps) * m[x];
      norm += pm[x];
    }
    if (norm > 0.0)
      for (std::size_t x = 0; x < r; ++x) pm[x] /= norm;
  }

  std::vector<double> post(at(0), at(0) + r);
  double s = 0.0;
  for (double v : post) s += v;
  if (!(s > 0.0)) throw std::runtime_error("revealed attributes have zero probability");
  for (double& v : post) v /= s;
  return post;
}

struct ProportionEstimate {
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t trials = 0;
};

/// Wilson score interval at 95%.
inline ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials) {
  ProportionEstimate e;
  e.trials = trials;
  if (trials == 0) return e;
  const double z = 1.959963984540054;
  const double nt = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / nt;
  const double denom = 1.0 + z * z / nt;
  const double centre = (ph + z * z / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nt + z * z / (4.0 * nt * nt)) / denom;
  e.estimate = ph;
  e.ci_lo = std::max(0.0, centre - half);
  e.ci_hi = std::min(1.0, centre + half);
  return e;
}

/// Probability that the non-coupled set of the two-root coupling is still nonempty at
/// depth R. Each non-coupled node has Poisson(d) children labeled from P(l); a child with
/// label l stays non-coupled with probability |1 - r eps(l)|. Per generation the children of
/// all non-coupled nodes are drawn per label as independent Poisson counts (superposition
/// and thinning), which has the same law as drawing them node by node.
inline ProportionEstimate coupling_survival(const SparseParams& p, std::uint32_t depth,
                                            std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("coupling_survival needs at least one trial");
  const ThresholdReport th = thresholds(p);
  const auto marginal = label_marginal(p);
  const double r = static_cast<double>(p.r);
  std::vector<double> rate(p.labels(), 0.0);  // per non-coupled parent
  for (std::size_t l = 0; l < p.labels(); ++l)
    if (th.epsilon_of_label[l])
      rate[l] = th.offspring_mean * marginal[l] * std::abs(1.0 - r * *th.epsilon_of_label[l]);

  constexpr double kSureSurvival = 1e7;
  Rng rng = make_rng(seed, Stream::coupling);
  std::size_t alive = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    double population = 1.0;
    for (std::uint32_t g = 0; g < depth && population > 0.0 && population < kSureSurvival; ++g) {
      double next = 0.0;
      for (double lr : rate) {
        if (lr <= 0.0) continue;
        std::poisson_distribution<long long> draw(lr * population);
        next += static_cast<double>(draw(rng));
      }
      population = next;
    }
    if (population > 0.0) ++alive;
  }
  return wilson_interval(alive, trials);
}

struct DeviationEstimate {
  std::uint32_t depth = 0;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Mean over sampled trees of |P(root = true attribute | tree, revealed) - 1/r| for each
/// reveal depth, with a normal 95% interval. Every depth reuses the same trees.
inline std::vector<DeviationEstimate> posterior_deviation(const SparseParams& p,
                                                          const std::vector<std::uint32_t>& depths,
                                                          std::size_t trials, std::uint64_t seed) {
  if (depths.empty()) return {};
  const std::uint32_t deepest = *std::max_element(depths.begin(), depths.end());
  std::vector<std::vector<double>> samples(depths.size());
  const double uniform = 1.0 / static_cast<double>(p.r);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const TreeInstance t = sample_tree(p, deepest, derive_seed(seed, trial));
    for (std::size_t k = 0; k < depths.size(); ++k) {
      const auto post = root_posterior(t, p, Conditioning::leaves_only, depths[k]);
      samples[k].push_back(std::abs(post[t.root().attribute] - uniform));
    }
  }
  std::vector<DeviationEstimate> out;
  for (std::size_t k = 0; k < depths.size(); ++k) {
    const auto& s = samples[k];
    const double nt = static_cast<double>(s.size());
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= nt;
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var = s.size() > 1 ? var / (nt - 1.0) : 0.0;
    const double half = 1.959963984540054 * std::sqrt(var / nt);
    out.push_back({depths[k], mean, mean - half, mean + half});
  }
  return out;
}

}  // namespace gsbm
