#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsbm/eigensolver.hpp"
#include "gsbm/graph.hpp"
#include "gsbm/random.hpp"
#include "gsbm/weighing.hpp"

namespace gsbm {

/// Symmetric sparse matrix with entry W(L_ij) on every observed edge and zero elsewhere.
inline SparseMatrix build_weighted_adjacency(const LabeledGraph& graph, const WeighingFunction& w) {
  if (w.size() != graph.alphabet.size())
    throw std::invalid_argument("weighing function and graph alphabet differ in size");
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * graph.edges.size());
  for (const Edge& e : graph.edges) {
    if (e.label >= w.size())
      throw std::invalid_argument("edge label id " + std::to_string(e.label) +
                                  " has no weight");
    const double value = w[e.label];
    entries.emplace_back(e.u, e.v, value);
    entries.emplace_back(e.v, e.u, value);
  }
  SparseMatrix a(static_cast<Eigen::Index>(graph.n), static_cast<Eigen::Index>(graph.n));
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

/// Top of the spectrum of the weighted adjacency plus the node embedding.
///
/// `eigenvalues` holds r + 1 values (fewer only when n <= r) so that the gap
/// |lambda_r| - |lambda_{r+1}| can be reported; `eigenvectors` holds r unit columns.
/// `embedding` is n x r once embed() has run.
struct SpectralState {
  std::size_t r = 0;
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::MatrixXd embedding;
  double max_residual = 0.0;

  std::size_t nodes() const { return static_cast<std::size_t>(eigenvectors.rows()); }

  /// |lambda_r| - |lambda_{r+1}|, or nullopt when lambda_{r+1} is not available.
  std::optional<double> gap() const {
    if (eigenvalues.size() <= r || r == 0) return std::nullopt;
    return std::abs(eigenvalues[r - 1]) - std::abs(eigenvalues[r]);
  }

  /// lambda_k / lambda_1 for every stored eigenvalue.
  std::vector<double> ratios() const {
    std::vector<double> out;
    for (double l : eigenvalues) out.push_back(l / eigenvalues.front());
    return out;
  }
};

inline SpectralState top_eigenpairs(const SparseMatrix& m, std::size_t r,
                                    const EigenOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (r < 1 || r > n) throw std::invalid_argument("rank r must lie in [1, n]");
  const std::size_t values = std::min(r + 1, n);
  EigenPairs pairs = leading_eigenpairs(m, values, r, opts);
  SpectralState s;
  s.r = r;
  s.eigenvalues = std::move(pairs.values);
  s.eigenvectors = std::move(pairs.vectors);
  s.max_residual = pairs.max_residual;
  return s;
}

/// z_i = sqrt(n) (lambda_k / lambda_1 * v_k(i))_{k=1..r}.
inline SpectralState embed(SpectralState state) {
  if (state.eigenvalues.empty() || state.eigenvalues.front() == 0.0)
    throw std::domain_error("cannot embed: leading eigenvalue is zero (empty graph?)");
  const double lead = state.eigenvalues.front();
  const double root_n = std::sqrt(static_cast<double>(state.nodes()));
  state.embedding.resize(state.eigenvectors.rows(), static_cast<Eigen::Index>(state.r));
  for (std::size_t k = 0; k < state.r; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    state.embedding.col(col) = (root_n * (state.eigenvalues[k] / lead)) * state.eigenvectors.col(col);
  }
  return state;
}

/// Continuous surrogate of 1{x <= eps}: 1 below eps, 0 above 2 eps, linear between.
inline double h_epsilon(double x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  return std::min(1.0, std::max(0.0, 2.0 - x / eps));
}

inline double median_of(std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Half the median pairwise embedding distance. Exact for n <= 2000; otherwise the median is
/// taken over `subsample` random pairs drawn from `seed`.
inline double select_epsilon(const SpectralState& state, std::size_t subsample = 200000,
                             std::uint64_t seed = 0) {
  const Eigen::MatrixXd& z = state.embedding;
  const Eigen::Index n = z.rows();
  if (n < 2 || z.cols() == 0) throw std::invalid_argument("embedding needs at least two nodes");
  std::vector<double> d;
  if (n <= 2000) {
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((z.row(i) - z.row(j)).norm());
  } else {
    Rng rng = make_rng(seed, Stream::epsilon);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    d.reserve(subsample);
    while (d.size() < subsample) {
      const Eigen::Index i = pick(rng);
      const Eigen::Index j = pick(rng);
      if (i != j) d.push_back((z.row(i) - z.row(j)).norm());
    }
  }
  const double eps = 0.5 * median_of(d);
  if (!(eps > 0.0)) throw std::domain_error("all embedding points coincide; epsilon is zero");
  return eps;
}

/// Smoothing weights h_eps(||z_k - z_i||) around node i, with their total in index order.
struct NeighborhoodWeights {
  std::vector<double> h;
  double total = 0.0;
};

inline NeighborhoodWeights neighborhood_weights(const SpectralState& state, double eps, NodeId i) {
  const Eigen::MatrixXd& z = state.embedding;
  NeighborhoodWeights out;
  out.h.resize(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const double v = h_epsilon((z.row(k) - z.row(i)).norm(), eps);
    out.h[static_cast<std::size_t>(k)] = v;
    out.total += v;
  }
  return out;
}

struct PairEstimate {
  std::vector<double> mu;  ///< one entry per label
  double b = 0.0;
};

/// Estimates for a list of node pairs; `muhat` stores `labels` entries per pair, pair-major.
struct PairEstimates {
  std::size_t labels = 0;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<double> bhat;
  std::vector<double> muhat;  ///< pairs.size() * labels, row-major by pair

  double mu(std::size_t p, LabelId l) const { return muhat[p * labels + l]; }
};

namespace detail {

/// Both estimators for the pair (i, j) from node i's weights. Sums run over i' != j.
inline void estimate_from_weights(const Adjacency& adj, const NeighborhoodWeights& w, double eps,
                                  NodeId j, std::size_t labels, double* mu_out, double& b_out) {
  std::fill(mu_out, mu_out + labels, 0.0);
  double edge_mass = 0.0;
  for (const Neighbor& nb : adj.neighbors(j)) {
    const double h = w.h[nb.node];
    mu_out[nb.label] += h;
    edge_mass += h;
  }
  const double denom_mu = eps + edge_mass;
  for (std::size_t l = 0; l < labels; ++l) mu_out[l] /= denom_mu;
  b_out = edge_mass / (eps + (w.total - w.h[j]));
}

}  // namespace detail

/// mu_hat_ij(l) = sum_{i'} h(||z_i' - z_i||) 1{L_i'j = l} / (eps + sum_{i'} h(.) A_i'j) and
/// B_hat_ij = sum_{i'} h(.) A_i'j / (eps + sum_{i'} h(.)), both with i' ranging over i' != j.
inline PairEstimate estimate_pair(const LabeledGraph& graph, const Adjacency& adj,
                                  const SpectralState& state, double eps, NodeId i, NodeId j) {
  if (i >= graph.n || j >= graph.n || i == j)
    throw std::invalid_argument("estimate_pair needs distinct nodes in range");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const auto w = neighborhood_weights(state, eps, i);
  PairEstimate out;
  out.mu.resize(graph.alphabet.size());
  detail::estimate_from_weights(adj, w, eps, j, out.mu.size(), out.mu.data(), out.b);
  return out;
}

/// Batch form of estimate_pair. Without an explicit pair list every ordered pair i != j is
/// estimated, grouped by i. Results equal the pairwise calls bit for bit.
inline PairEstimates estimate_all_pairs(const LabeledGraph& graph, const Adjacency& adj,
                                        const SpectralState& state, double eps,
                                        std::optional<std::vector<std::pair<NodeId, NodeId>>> pairs = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  PairEstimates out;
  out.labels = graph.alphabet.size();
  if (pairs) {
    out.pairs = std::move(*pairs);
  } else {
    out.pairs.reserve(graph.n * (graph.n > 0 ? graph.n - 1 : 0));
    for (NodeId i = 0; i < graph.n; ++i)
      for (NodeId j = 0; j < graph.n; ++j)
        if (i != j) out.pairs.emplace_back(i, j);
  }
  for (const auto& [i, j] : out.pairs)
    if (i >= graph.n || j >= graph.n || i == j)
      throw std::invalid_argument("pair list needs distinct nodes in range");

  out.bhat.resize(out.pairs.size());
  out.muhat.resize(out.pairs.size() * out.labels);

  std::vector<std::size_t> order(out.pairs.size());
  for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.pairs[a].first < out.pairs[b].first;
  });

  NeighborhoodWeights w;
  std::optional<NodeId> current;
  for (std::size_t p : order) {
    const auto [i, j] = out.pairs[p];
    if (current != i) {
      w = neighborhood_weights(state, eps, i);
      current = i;
    }
    detail::estimate_from_weights(adj, w, eps, j, out.labels, &out.muhat[p * out.labels],
                                  out.bhat[p]);
  }
  return out;
}

/// Deviation t with P(sum X_i >= t) <= exp(-u) for independent |X_i| <= M with total
/// variance sigma2 (Bernstein).
inline double bernstein_deviation(double sigma2, double bound, double u) {
  return std::sqrt(2.0 * sigma2 * u) + 2.0 * bound * u / 3.0;
}

}  // namespace gsbm
