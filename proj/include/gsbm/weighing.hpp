#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsbm/graph.hpp"
#include "gsbm/random.hpp"

namespace gsbm {

/// How a fixed weight override is applied.
enum class WeightMode {
  rescaled,  ///< affinely mapped onto [0, 1] when any value falls outside it
  raw,       ///< used verbatim, may lie outside [0, 1]
};

/// One real weight per label, indexed by label id.
class WeighingFunction {
 public:
  WeighingFunction() = default;

  /// Weights must lie in [0, 1] unless `raw` is set.
  WeighingFunction(std::vector<double> weights, bool raw = false)
      : weights_(std::move(weights)), raw_(raw) {
    if (weights_.empty()) throw std::invalid_argument("weighing function needs a weight per label");
    for (double w : weights_) {
      if (!std::isfinite(w)) throw std::invalid_argument("weights must be finite");
      if (!raw_ && (w < 0.0 || w > 1.0))
        throw std::invalid_argument("weights must lie in [0, 1]");
    }
  }

  /// Unit weight on every label: the weighted adjacency is the 0/1 adjacency.
  static WeighingFunction unit(const LabelAlphabet& alphabet) {
    return WeighingFunction(std::vector<double>(alphabet.size(), 1.0));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](LabelId id) const { return weights_.at(id); }
  const std::vector<double>& weights() const { return weights_; }
  bool raw() const { return raw_; }

  /// The same function with every weight multiplied by c.
  WeighingFunction scaled(double c) const {
    std::vector<double> w = weights_;
    bool outside = raw_;
    for (double& x : w) {
      x *= c;
      outside = outside || x < 0.0 || x > 1.0;
    }
    return WeighingFunction(std::move(w), outside);
  }

  bool operator==(const WeighingFunction&) const = default;

 private:
  std::vector<double> weights_;
  bool raw_ = false;
};

/// I.i.d. Uniform[0, 1] weight for each label, in alphabet order.
inline WeighingFunction draw_weighing(const LabelAlphabet& alphabet, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::weighing);
  std::vector<double> w(alphabet.size());
  for (double& x : w) x = uniform01(rng);
  return WeighingFunction(std::move(w));
}

/// Fixed weights by label name. Every label needs exactly one entry.
inline WeighingFunction weighing_from_map(const LabelAlphabet& alphabet,
                                          const std::map<std::string, double>& values,
                                          WeightMode mode) {
  if (values.size() != alphabet.size())
    throw std::invalid_argument("weight override must give one weight per label");
  std::vector<double> w(alphabet.size());
  for (const auto& [label, value] : values) w[alphabet.index_of(label)] = value;
  if (mode == WeightMode::raw) return WeighingFunction(std::move(w), true);

  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  if (*lo < 0.0 || *hi > 1.0) {
    const double a = *lo;
    const double span = *hi - *lo;
    for (double& x : w) x = span > 0.0 ? (x - a) / span : 1.0;
  }
  return WeighingFunction(std::move(w));
}

}  // namespace gsbm
