#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gsbm/graph.hpp"
#include "gsbm/random.hpp"

namespace gsbm {

// ---------------------------------------------------------------------------
// Attribute spaces
// ---------------------------------------------------------------------------

/// {0, ..., r-1} with probability weights.
struct FiniteSet {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// [0, 1] with the uniform measure.
struct UnitInterval {};

using AttributeSpace = std::variant<FiniteSet, UnitInterval>;

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Edge probabilities B and label laws mu between the classes of a finite space.
/// mu[x * r + y] is a probability vector over the label alphabet.
struct BlockKernel {
  Eigen::MatrixXd B;
  std::vector<std::vector<double>> mu;

  std::size_t classes() const { return static_cast<std::size_t>(B.rows()); }
  const std::vector<double>& label_law(std::size_t x, std::size_t y) const {
    return mu[x * classes() + y];
  }

  /// Block kernel where every pair of classes shares one label law.
  static BlockKernel unlabeled(Eigen::MatrixXd B) {
    const auto r = static_cast<std::size_t>(B.rows());
    return {std::move(B), std::vector<std::vector<double>>(r * r, std::vector<double>{1.0})};
  }
};

enum class FourierProfile {
  series,             ///< g0 + sum_k gk cos(2 pi k x), finitely many terms
  absolute_value,     ///< g(x) = |x| on [-1/2, 1/2]
  quarter_indicator,  ///< g(x) = 1{|x| <= 1/4} on [-1/2, 1/2]
};

/// How labels are drawn on the edge (x, y) of a translation-invariant kernel.
enum class LabelRule {
  single,      ///< one-label alphabet
  plus_minus,  ///< two labels; the first has probability 2 g(x - y), the second the rest
};

/// B(x, y) = g(x - y) for an even 1-periodic g on the unit interval.
///
/// Built-in profiles are evaluated in closed form, both pointwise and for every Fourier
/// coefficient; `gk` then only caches the leading coefficients. Series profiles are exactly
/// the finite cosine sum g0 + sum_{k>=1} gk[k-1] cos(2 pi k x).
struct FourierKernel {
  FourierProfile profile = FourierProfile::series;
  double g0 = 0.0;
  std::vector<double> gk;
  LabelRule label_rule = LabelRule::single;

  static FourierKernel absolute_value(LabelRule rule = LabelRule::single,
                                      std::size_t cached = 64) {
    return builtin(FourierProfile::absolute_value, rule, cached);
  }

  static FourierKernel quarter_indicator(LabelRule rule = LabelRule::single,
                                         std::size_t cached = 64) {
    return builtin(FourierProfile::quarter_indicator, rule, cached);
  }

  static FourierKernel series(double g0, std::vector<double> gk,
                              LabelRule rule = LabelRule::single) {
    return {FourierProfile::series, g0, std::move(gk), rule};
  }

  static FourierKernel constant(double c) { return series(c, {}); }

  /// Cosine coefficient of order k (k = 0 is the mean).
  double coefficient(std::size_t k) const {
    constexpr double pi = std::numbers::pi;
    switch (profile) {
      case FourierProfile::absolute_value: {
        if (k == 0) return 0.25;
        if (k % 2 == 0) return 0.0;
        const double kk = static_cast<double>(k);
        return -2.0 / (pi * pi * kk * kk);
      }
      case FourierProfile::quarter_indicator: {
        if (k == 0) return 0.5;
        if (k % 2 == 0) return 0.0;
        const double s = (k % 4 == 1) ? 1.0 : -1.0;
        return 2.0 * s / (pi * static_cast<double>(k));
      }
      case FourierProfile::series:
        if (k == 0) return g0;
        return k <= gk.size() ? gk[k - 1] : 0.0;
    }
    return 0.0;
  }

  /// Number of nonzero harmonics, or nullopt for an infinite expansion.
  std::optional<std::size_t> degree() const {
    if (profile == FourierProfile::series) return gk.size();
    return std::nullopt;
  }

  /// g evaluated at any real x (1-periodic).
  double operator()(double x) const {
    const double t = x - std::round(x);  // in [-1/2, 1/2]
    switch (profile) {
      case FourierProfile::absolute_value:
        return std::abs(t);
      case FourierProfile::quarter_indicator:
        return std::abs(t) <= 0.25 ? 1.0 : 0.0;
      case FourierProfile::series: {
        double v = g0;
        for (std::size_t k = 1; k <= gk.size(); ++k)
          v += gk[k - 1] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * t);
        return v;
      }
    }
    return 0.0;
  }

 private:
  static FourierKernel builtin(FourierProfile p, LabelRule rule, std::size_t cached) {
    FourierKernel k{p, 0.0, {}, rule};
    k.g0 = k.coefficient(0);
    k.gk.reserve(cached);
    for (std::size_t i = 1; i <= cached; ++i) k.gk.push_back(k.coefficient(i));
    return k;
  }
};

using KernelSpec = std::variant<BlockKernel, FourierKernel>;

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelSpec {
  std::size_t n = 0;
  AttributeSpace space = UnitInterval{};
  KernelSpec kernel = FourierKernel::absolute_value();
  LabelAlphabet alphabet;
  double omega = 0.0;

  /// Probability that a drawn edge is observed.
  double retention() const { return n == 0 ? 0.0 : omega / static_cast<double>(n); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void validate_probability_vector(const std::vector<double>& p, std::size_t size,
                                        const std::string& what) {
  require(p.size() == size, what + ": expected " + std::to_string(size) + " entries");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), what + ": negative or non-finite entry");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-12, what + ": entries must sum to 1");
}

}  // namespace detail

/// Probability of the first label of a plus/minus rule at kernel value g.
inline double plus_probability(double g) { return 2.0 * g; }

inline void ModelSpec::validate() const {
  using detail::require;
  require(omega >= 0.0 && std::isfinite(omega), "omega must be a nonnegative real");
  require(retention() <= 1.0, "omega / n must not exceed 1");

  if (const auto* fs = std::get_if<FiniteSet>(&space)) {
    require(fs->size() >= 1, "finite attribute space needs at least one element");
    detail::validate_probability_vector(fs->weights, fs->size(), "attribute weights");
    const auto* bk = std::get_if<BlockKernel>(&kernel);
    require(bk != nullptr, "a finite attribute space requires a block kernel");
    const std::size_t r = fs->size();
    require(bk->B.rows() == static_cast<Eigen::Index>(r) && bk->B.cols() == bk->B.rows(),
            "block matrix B must be r x r");
    require(bk->mu.size() == r * r, "label laws mu must have r * r entries");
    for (std::size_t x = 0; x < r; ++x) {
      for (std::size_t y = 0; y < r; ++y) {
        const double b = bk->B(x, y);
        require(b >= 0.0 && b <= 1.0, "B entries must lie in [0, 1]");
        require(b == bk->B(y, x), "B must be symmetric");
        detail::validate_probability_vector(bk->label_law(x, y), alphabet.size(),
                                            "label law mu");
        require(bk->label_law(x, y) == bk->label_law(y, x), "mu must be symmetric");
      }
    }
  } else {
    const auto* fk = std::get_if<FourierKernel>(&kernel);
    require(fk != nullptr, "the unit interval requires a Fourier kernel");
    switch (fk->label_rule) {
      case LabelRule::single:
        require(alphabet.size() == 1, "single label rule needs a one-label alphabet");
        break;
      case LabelRule::plus_minus:
        require(alphabet.size() == 2, "plus/minus label rule needs a two-label alphabet");
        break;
    }
    constexpr int grid = 10000;
    for (int a = 0; a <= grid; ++a) {
      const double x = -0.5 + static_cast<double>(a) / grid;
      const double g = (*fk)(x);
      require(g >= -1e-12 && g <= 1.0 + 1e-12, "g must take values in [0, 1]");
      if (fk->label_rule == LabelRule::plus_minus && g > 0.0)
        require(plus_probability(g) <= 1.0 + 1e-12,
                "plus/minus label rule needs 2 g(x) <= 1 wherever g > 0");
    }
  }
}

/// Edge probability B(x, y) before retention.
inline double edge_probability(const KernelSpec& kernel, double x, double y) {
  if (const auto* bk = std::get_if<BlockKernel>(&kernel))
    return bk->B(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  const auto& fk = std::get<FourierKernel>(kernel);
  return fk(x - y);
}

/// Label law mu_{x,y} written into `out` (size = alphabet size).
inline void label_probabilities(const KernelSpec& kernel, double x, double y,
                                std::vector<double>& out) {
  if (const auto* bk = std::get_if<BlockKernel>(&kernel)) {
    out = bk->label_law(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    return;
  }
  const auto& fk = std::get<FourierKernel>(kernel);
  if (fk.label_rule == LabelRule::single) {
    out.assign(1, 1.0);
    return;
  }
  const double p = std::clamp(plus_probability(fk(x - y)), 0.0, 1.0);
  out = {p, 1.0 - p};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline std::vector<double> sample_attributes(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, Stream::attributes);
  std::vector<double> sigma(spec.n);
  if (const auto* fs = std::get_if<FiniteSet>(&spec.space)) {
    std::discrete_distribution<std::size_t> pick(fs->weights.begin(), fs->weights.end());
    for (auto& s : sigma) s = static_cast<double>(pick(rng));
  } else {
    for (auto& s : sigma) s = uniform01(rng);
  }
  return sigma;
}

/// Draws one labeled graph given the node attributes. Each unordered pair i < j carries an
/// observed edge with probability (omega / n) B(sigma_i, sigma_j); its label follows
/// mu_{sigma_i, sigma_j}. Edge and label draws use separate streams of `seed`.
inline LabeledGraph generate_graph(const ModelSpec& spec, const std::vector<double>& attributes,
                                   std::uint64_t seed) {
  spec.validate();
  if (attributes.size() != spec.n)
    throw std::invalid_argument("attribute vector length differs from n");

  LabeledGraph g;
  g.n = spec.n;
  g.alphabet = spec.alphabet;
  g.attributes = attributes;

  const double keep = spec.retention();
  if (keep == 0.0) return g;

  Rng edge_rng = make_rng(seed, Stream::edges);
  Rng label_rng = make_rng(seed, Stream::labels);
  const std::size_t labels = spec.alphabet.size();
  std::vector<double> law;

  auto draw_label = [&](double x, double y) -> LabelId {
    if (labels == 1) return 0;
    label_probabilities(spec.kernel, x, y, law);
    const double u = uniform01(label_rng);
    double acc = 0.0;
    for (std::size_t l = 0; l + 1 < labels; ++l) {
      acc += law[l];
      if (u < acc) return static_cast<LabelId>(l);
    }
    return static_cast<LabelId>(labels - 1);
  };

  for (std::size_t i = 0; i < spec.n; ++i) {
    const double xi = attributes[i];
    for (std::size_t j = i + 1; j < spec.n; ++j) {
      const double p = keep * edge_probability(spec.kernel, xi, attributes[j]);
      if (uniform01(edge_rng) < p)
        g.edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j),
                           draw_label(xi, attributes[j])});
    }
  }
  return g;
}

/// Mean and variance of the edge count given the attributes.
struct EdgeCountMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline EdgeCountMoments edge_count_moments(const ModelSpec& spec,
                                           const std::vector<double>& attributes) {
  EdgeCountMoments m;
  const double keep = spec.retention();
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t j = i + 1; j < spec.n; ++j) {
      const double p = keep * edge_probability(spec.kernel, attributes[i], attributes[j]);
      m.mean += p;
      m.variance += p * (1.0 - p);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Identifiability
// ---------------------------------------------------------------------------

struct IdentifiabilityReport {
  bool checked = false;  ///< false for continuous attribute spaces
  bool identifiable = false;
  double min_separation = std::numeric_limits<double>::quiet_NaN();
};

/// min over x != x' of sum_l sum_y P(y) |nu_{x,y}(l) - nu_{x',y}(l)| with nu = B mu.
/// A one-point space has no pair to separate and is reported identifiable with +inf.
inline IdentifiabilityReport check_identifiability(const ModelSpec& spec) {
  IdentifiabilityReport rep;
  const auto* fs = std::get_if<FiniteSet>(&spec.space);
  if (fs == nullptr) return rep;
  spec.validate();
  const auto& bk = std::get<BlockKernel>(spec.kernel);
  const std::size_t r = fs->size();
  const std::size_t labels = spec.alphabet.size();
  rep.checked = true;
  rep.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t xp = x + 1; xp < r; ++xp) {
      double sep = 0.0;
      for (std::size_t y = 0; y < r; ++y)
        for (std::size_t l = 0; l < labels; ++l) {
          const double a = bk.B(x, y) * bk.label_law(x, y)[l];
          const double b = bk.B(xp, y) * bk.label_law(xp, y)[l];
          sep += fs->weights[y] * std::abs(a - b);
        }
      rep.min_separation = std::min(rep.min_separation, sep);
    }
  rep.identifiable = rep.min_separation > 1e-9;
  return rep;
}

}  // namespace gsbm
