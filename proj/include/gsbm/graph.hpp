#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace gsbm {

using NodeId = std::uint32_t;
using LabelId = std::uint32_t;

/// Ordered set of distinct edge labels. Position in the list is the label id.
class LabelAlphabet {
 public:
  LabelAlphabet() : labels_{"1"} {}

  explicit LabelAlphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw std::invalid_argument("label alphabet must not be empty");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
      if (l.empty() || l.find_first_of(" \t\n,") != std::string::npos)
        throw std::invalid_argument("label '" + l + "' must be non-empty without blanks or commas");
      if (!seen.insert(l).second) throw std::invalid_argument("duplicate label '" + l + "'");
    }
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& name(LabelId id) const { return labels_.at(id); }
  const std::vector<std::string>& names() const { return labels_; }

  std::optional<LabelId> find(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<LabelId>(it - labels_.begin());
  }

  LabelId index_of(const std::string& label) const {
    if (auto id = find(label)) return *id;
    throw std::invalid_argument("unknown label '" + label + "'");
  }

  bool operator==(const LabelAlphabet&) const = default;

 private:
  std::vector<std::string> labels_;
};

struct Edge {
  NodeId u;
  NodeId v;
  LabelId label;
  bool operator==(const Edge&) const = default;
};

/// Simple undirected graph with one label per edge. Edges are stored once with u < v,
/// sorted lexicographically. `attributes` holds the hidden node attributes; for finite
/// attribute spaces the value is the class index stored as an exact integer.
struct LabeledGraph {
  std::size_t n = 0;
  LabelAlphabet alphabet;
  std::vector<Edge> edges;
  std::vector<double> attributes;

  /// Throws if the graph has a self-loop, a duplicate or unsorted pair, or a label id
  /// outside the alphabet.
  void validate() const {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Edge& ed = edges[e];
      if (ed.u >= ed.v) throw std::logic_error("edge must satisfy u < v (no self-loops)");
      if (ed.v >= n) throw std::logic_error("edge endpoint out of range");
      if (ed.label >= alphabet.size()) throw std::logic_error("edge label outside alphabet");
      if (e > 0) {
        const Edge& prev = edges[e - 1];
        if (std::pair(prev.u, prev.v) >= std::pair(ed.u, ed.v))
          throw std::logic_error("edges must be sorted and unique");
      }
    }
    if (!attributes.empty() && attributes.size() != n)
      throw std::logic_error("attribute vector length differs from node count");
  }

  bool operator==(const LabeledGraph&) const = default;
};

struct Neighbor {
  NodeId node;
  LabelId label;
};

/// Compressed row storage of the symmetric labeled adjacency, rows sorted by neighbor.
class Adjacency {
 public:
  explicit Adjacency(const LabeledGraph& g) : offsets_(g.n + 1, 0) {
    for (const Edge& e : g.edges) {
      ++offsets_[e.u + 1];
      ++offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < g.n; ++i) offsets_[i + 1] += offsets_[i];
    entries_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : g.edges) {
      entries_[fill[e.u]++] = {e.v, e.label};
      entries_[fill[e.v]++] = {e.u, e.label};
    }
    for (std::size_t i = 0; i < g.n; ++i)
      std::sort(entries_.begin() + offsets_[i], entries_.begin() + offsets_[i + 1],
                [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }

  std::size_t size() const { return offsets_.size() - 1; }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  std::span<const Neighbor> neighbors(NodeId i) const {
    return {entries_.data() + offsets_[i], degree(i)};
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> entries_;
};

}  // namespace gsbm
