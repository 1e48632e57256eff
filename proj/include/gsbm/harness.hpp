#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsbm/config.hpp"
#include "gsbm/eigensolver.hpp"
#include "gsbm/graph.hpp"
#include "gsbm/io.hpp"
#include "gsbm/model.hpp"
#include "gsbm/operator_spectrum.hpp"
#include "gsbm/procrustes.hpp"
#include "gsbm/random.hpp"
#include "gsbm/spectral.hpp"
#include "gsbm/tree_threshold.hpp"
#include "gsbm/weighing.hpp"

namespace gsbm {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Baselines and error metrics
// ---------------------------------------------------------------------------

/// Empirical averages. Both depend on the first node of the pair only:
/// B_bar_ij = deg(i) / (n - 1), mu_bar_ij(l) = share of label l among the edges at i
/// (uniform when i is isolated).
struct BaselineEstimates {
  std::size_t labels = 0;
  std::vector<double> rate;
  std::vector<double> label_share;  ///< n * labels, row-major by node

  double b(NodeId i, NodeId /*j*/) const { return rate[i]; }
  double mu(NodeId i, NodeId /*j*/, LabelId l) const { return label_share[i * labels + l]; }
};

inline BaselineEstimates baseline_estimates(const LabeledGraph& g, const Adjacency& adj) {
  BaselineEstimates out;
  out.labels = g.alphabet.size();
  out.rate.assign(g.n, 0.0);
  out.label_share.assign(g.n * out.labels, 0.0);
  const double denom = g.n > 1 ? static_cast<double>(g.n - 1) : 1.0;
  for (NodeId i = 0; i < g.n; ++i) {
    const std::size_t deg = adj.degree(i);
    out.rate[i] = static_cast<double>(deg) / denom;
    double* share = &out.label_share[i * out.labels];
    if (deg == 0) {
      for (std::size_t l = 0; l < out.labels; ++l) share[l] = 1.0 / static_cast<double>(out.labels);
      continue;
    }
    for (const Neighbor& nb : adj.neighbors(i)) share[nb.label] += 1.0;
    for (std::size_t l = 0; l < out.labels; ++l) share[l] /= static_cast<double>(deg);
  }
  return out;
}

/// ||estimate - truth|| / ||baseline - truth|| accumulated entry by entry.
class NmseAccumulator {
 public:
  void add(double estimate, double truth, double baseline) {
    num_ += (estimate - truth) * (estimate - truth);
    den_ += (baseline - truth) * (baseline - truth);
  }
  /// Variant with separate references for the estimate and the baseline.
  void add(double estimate, double truth_num, double baseline, double truth_den) {
    num_ += (estimate - truth_num) * (estimate - truth_num);
    den_ += (baseline - truth_den) * (baseline - truth_den);
  }
  double value() const {
    if (!(den_ > 0.0)) throw std::domain_error("NMSE undefined: baseline equals the truth");
    return std::sqrt(num_ / den_);
  }

 private:
  double num_ = 0.0;
  double den_ = 0.0;
};

inline double nmse(const std::vector<double>& estimate, const std::vector<double>& truth,
                   const std::vector<double>& baseline) {
  if (estimate.size() != truth.size() || baseline.size() != truth.size())
    throw std::invalid_argument("nmse needs vectors of equal length");
  NmseAccumulator acc;
  for (std::size_t k = 0; k < truth.size(); ++k) acc.add(estimate[k], truth[k], baseline[k]);
  return acc.value();
}

// ---------------------------------------------------------------------------
// Algorithm
// ---------------------------------------------------------------------------

struct InferenceResult {
  WeighingFunction weighing;
  SpectralState state;
  double epsilon = 0.0;
  bool gap_warning = false;  ///< |lambda_r| - |lambda_{r+1}| < 1e-3 |lambda_1|
};

inline WeighingFunction choose_weighing(const LabelAlphabet& alphabet, const AlgorithmConfig& cfg,
                                        std::uint64_t seed) {
  if (cfg.weights) return weighing_from_map(alphabet, *cfg.weights, cfg.weight_mode);
  return draw_weighing(alphabet, seed);
}

/// Weighing, top-r spectrum, embedding and bandwidth for one graph.
inline InferenceResult run_algorithm(const LabeledGraph& g, const AlgorithmConfig& cfg,
                                     std::uint64_t seed) {
  InferenceResult res;
  res.weighing = choose_weighing(g.alphabet, cfg, seed);
  EigenOptions opts;
  opts.tol = cfg.tol;
  opts.method = cfg.method;
  opts.seed = seed;
  res.state = embed(top_eigenpairs(build_weighted_adjacency(g, res.weighing), cfg.r, opts));
  if (const auto gap = res.state.gap())
    res.gap_warning = *gap < 1e-3 * std::abs(res.state.eigenvalues.front());
  res.epsilon = cfg.epsilon ? *cfg.epsilon : select_epsilon(res.state, cfg.subsample, seed);
  return res;
}

struct Evaluation {
  double nmse_b = 0.0;
  std::optional<double> nmse_mu;  ///< absent for a single label
};

/// NMSE of both estimators against the truth over every ordered pair i != j. With
/// `literal_mu` the label estimate is compared with (omega / n) mu* in the numerator only.
inline Evaluation evaluate_estimates(const LabeledGraph& g, const Adjacency& adj,
                                     const InferenceResult& res, const ModelSpec& spec,
                                     bool literal_mu = false) {
  if (g.attributes.size() != g.n) throw std::invalid_argument("evaluation needs node attributes");
  const BaselineEstimates base = baseline_estimates(g, adj);
  const std::size_t labels = g.alphabet.size();
  const double keep = spec.retention();
  NmseAccumulator acc_b, acc_mu;
  std::vector<double> mu_hat(labels), law(labels);
  double b_hat = 0.0;
  for (NodeId i = 0; i < g.n; ++i) {
    const auto w = neighborhood_weights(res.state, res.epsilon, i);
    for (NodeId j = 0; j < g.n; ++j) {
      if (i == j) continue;
      detail::estimate_from_weights(adj, w, res.epsilon, j, labels, mu_hat.data(), b_hat);
      const double xi = g.attributes[i];
      const double xj = g.attributes[j];
      acc_b.add(b_hat, keep * edge_probability(spec.kernel, xi, xj), base.b(i, j));
      if (labels < 2) continue;
      label_probabilities(spec.kernel, xi, xj, law);
      for (std::size_t l = 0; l < labels; ++l) {
        const auto lid = static_cast<LabelId>(l);
        acc_mu.add(mu_hat[l], literal_mu ? keep * law[l] : law[l], base.mu(i, j, lid), law[l]);
      }
    }
  }
  Evaluation ev;
  ev.nmse_b = acc_b.value();
  if (labels >= 2) ev.nmse_mu = acc_mu.value();
  return ev;
}

/// Operator spectrum matching the model: closed form for translation-invariant kernels,
/// exact finite spectrum for block kernels.
inline OperatorSpectrum model_spectrum(const ModelSpec& spec, const WeighingFunction& w,
                                       std::size_t harmonics = 512) {
  if (std::holds_alternative<FourierKernel>(spec.kernel)) return fourier_spectrum(spec.kernel, w, harmonics);
  return nystrom_spectrum(spec.space, spec.kernel, w);
}

/// Procrustes residual of the embedding against the ideal embedding (see
/// block_procrustes_residual), or nullopt when the operator has fewer than r nonzero
/// eigenvalues.
inline std::optional<double> embedding_residual(const InferenceResult& res, const OperatorSpectrum& op,
                                                const std::vector<double>& attributes) {
  const std::size_t r = res.state.r;
  if (op.eigenvalues.size() < r || op.eigenfunctions.size() < r) return std::nullopt;
  const Eigen::MatrixXd f = ideal_embedding(op, attributes, r);
  return block_procrustes_residual(res.state.embedding, f, op.eigenvalues);
}

// ---------------------------------------------------------------------------
// Experiment pipeline
// ---------------------------------------------------------------------------

struct MetricsRow {
  double omega_over_n = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double nmse_b = 0.0;
  std::optional<double> nmse_mu;
  double epsilon = 0.0;
  std::optional<double> eigen_gap;
  std::optional<double> procrustes_residual;
  std::vector<double> eigen_ratios;
  bool gap_warning = false;
  double wall_clock = 0.0;
};

/// Seed of replicate `rep` at sweep point `point`.
inline std::uint64_t replicate_seed(std::uint64_t root, std::size_t point, std::size_t rep) {
  return derive_seed(derive_seed(root, static_cast<std::uint64_t>(point)), static_cast<std::uint64_t>(rep));
}

struct ReplicateRun {
  MetricsRow metrics;
  LabeledGraph graph;
  InferenceResult inference;
  Eigen::MatrixXd ideal;  ///< empty when the operator spectrum is too short
};

inline ReplicateRun run_replicate(const ExperimentConfig& cfg, double retention, std::uint64_t seed,
                                  std::size_t replicate = 0) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec spec = cfg.model_at(retention);
  ReplicateRun run;
  run.graph = generate_graph(spec, sample_attributes(spec, seed), seed);
  const Adjacency adj(run.graph);
  run.inference = run_algorithm(run.graph, cfg.algorithm, seed);
  const Evaluation ev = evaluate_estimates(run.graph, adj, run.inference, spec, cfg.output.literal_mu_nmse);
  const OperatorSpectrum op = model_spectrum(spec, run.inference.weighing, cfg.spectrum.harmonics);

  MetricsRow& m = run.metrics;
  m.omega_over_n = retention;
  m.replicate = replicate;
  m.seed = seed;
  m.nmse_b = ev.nmse_b;
  m.nmse_mu = ev.nmse_mu;
  m.epsilon = run.inference.epsilon;
  m.eigen_gap = run.inference.state.gap();
  m.eigen_ratios = run.inference.state.ratios();
  m.gap_warning = run.inference.gap_warning;
  const std::size_t r = cfg.algorithm.r;
  if (op.eigenvalues.size() >= r && op.eigenfunctions.size() >= r) {
    run.ideal = ideal_embedding(op, run.graph.attributes, r);
    m.procrustes_residual = block_procrustes_residual(run.inference.state.embedding, run.ideal, op.eigenvalues);
  }
  m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_csv(*v) : ""; }

inline std::vector<std::string> metrics_header(std::size_t r) {
  std::vector<std::string> h{"omega_over_n", "replicate", "seed", "nmse_b", "nmse_mu",
                             "epsilon", "eigen_gap", "procrustes_residual"};
  for (std::size_t k = 1; k <= r + 1; ++k) h.push_back("ratio_" + std::to_string(k));
  return h;
}

inline std::vector<std::string> metrics_cells(const MetricsRow& m, std::size_t r) {
  std::vector<std::string> row{format_csv(m.omega_over_n), std::to_string(m.replicate), std::to_string(m.seed),
                               format_csv(m.nmse_b), optional_cell(m.nmse_mu), format_csv(m.epsilon),
                               optional_cell(m.eigen_gap), optional_cell(m.procrustes_residual)};
  for (std::size_t k = 0; k <= r; ++k)
    row.push_back(k < m.eigen_ratios.size() ? format_csv(m.eigen_ratios[k]) : "");
  return row;
}

/// Sorted list of `count` ordered pairs drawn without replacement, or all pairs when
/// count is 0 or at least n (n - 1).
inline std::vector<std::pair<NodeId, NodeId>> estimate_pair_sample(std::size_t n, std::size_t count,
                                                                   std::uint64_t seed) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  const std::size_t total = n * (n > 0 ? n - 1 : 0);
  if (count == 0 || count >= total) {
    pairs.reserve(total);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = 0; j < n; ++j)
        if (i != j) pairs.emplace_back(i, j);
    return pairs;
  }
  Rng rng = make_rng(seed, Stream::pairs);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::vector<std::size_t> codes;
  codes.reserve(count);
  std::vector<bool> taken(total, false);
  while (codes.size() < count) {
    const std::size_t c = pick(rng);
    if (taken[c]) continue;
    taken[c] = true;
    codes.push_back(c);
  }
  std::sort(codes.begin(), codes.end());
  for (std::size_t c : codes) {
    const auto i = static_cast<NodeId>(c / (n - 1));
    auto j = static_cast<NodeId>(c % (n - 1));
    if (j >= i) ++j;
    pairs.emplace_back(i, j);
  }
  return pairs;
}

inline std::vector<std::string> estimates_header(const LabelAlphabet& alphabet, bool with_retention) {
  std::vector<std::string> h;
  if (with_retention) h.push_back("omega_over_n");
  for (const char* c : {"i", "j", "bhat"}) h.emplace_back(c);
  for (const auto& l : alphabet.names()) h.push_back("muhat_" + l);
  return h;
}

inline void write_estimates(CsvWriter& out, const LabeledGraph& g, const InferenceResult& res,
                            std::size_t count, std::uint64_t seed, std::optional<double> retention) {
  const Adjacency adj(g);
  const PairEstimates est = estimate_all_pairs(g, adj, res.state, res.epsilon,
                                               estimate_pair_sample(g.n, count, seed));
  for (std::size_t p = 0; p < est.pairs.size(); ++p) {
    std::vector<std::string> row;
    if (retention) row.push_back(format_csv(*retention));
    row.push_back(std::to_string(est.pairs[p].first));
    row.push_back(std::to_string(est.pairs[p].second));
    row.push_back(format_csv(est.bhat[p]));
    for (std::size_t l = 0; l < est.labels; ++l) row.push_back(format_csv(est.mu(p, static_cast<LabelId>(l))));
    out.row(row);
  }
}

/// Header of the embedding dump: sigma and f columns appear only when attributes are known.
inline std::vector<std::string> embedding_header(std::size_t r, bool with_truth, bool with_retention) {
  std::vector<std::string> h;
  if (with_retention) h.push_back("omega_over_n");
  h.push_back("i");
  if (with_truth) h.push_back("sigma");
  for (std::size_t k = 1; k <= r; ++k) h.push_back("z_" + std::to_string(k));
  if (with_truth)
    for (std::size_t k = 1; k <= r; ++k) h.push_back("f_" + std::to_string(k));
  if (r >= 3) {
    h.push_back("v3");
    h.push_back("v2");
  }
  return h;
}

inline void write_embedding(CsvWriter& out, const SpectralState& s, const std::vector<double>* sigma,
                            const Eigen::MatrixXd* ideal, std::optional<double> retention) {
  for (Eigen::Index i = 0; i < s.embedding.rows(); ++i) {
    std::vector<std::string> row;
    if (retention) row.push_back(format_csv(*retention));
    row.push_back(std::to_string(i));
    if (sigma) row.push_back(format_csv((*sigma)[static_cast<std::size_t>(i)]));
    for (Eigen::Index k = 0; k < s.embedding.cols(); ++k) row.push_back(format_csv(s.embedding(i, k)));
    if (sigma)
      for (Eigen::Index k = 0; k < s.embedding.cols(); ++k)
        row.push_back(ideal && ideal->size() > 0 ? format_csv((*ideal)(i, k)) : "");
    if (s.r >= 3) {
      row.push_back(format_csv(s.eigenvectors(i, 2)));
      row.push_back(format_csv(s.eigenvectors(i, 1)));
    }
    out.row(row);
  }
}

/// run.json: config hash, seed, component versions and any per-point failures.
inline void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const std::string& command, const std::vector<std::string>& failures = {}) {
  nlohmann::json j;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical)));
  j["command"] = command;
  j["config_hash"] = std::string("fnv1a64:") + hash;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.root_seed;
  j["versions"] = {{"gsbm", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  j["failures"] = failures;
  write_text_file(dir / "run.json", [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

struct ExperimentSummary {
  std::vector<MetricsRow> rows;
  std::vector<std::string> failures;
};

/// Every sweep point and replicate in turn. Writes metrics.csv, timings.csv,
/// eigenvalues.csv, and for replicate 0 of each point estimates.csv and embedding.csv.
/// A failing replicate is reported and the rest still run.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log = std::cerr) {
  const auto& dir = cfg.output.dir;
  std::filesystem::create_directories(dir);
  const std::size_t r = cfg.algorithm.r;
  CsvWriter metrics(dir / "metrics.csv", metrics_header(r));
  CsvWriter timings(dir / "timings.csv", {"omega_over_n", "replicate", "seconds"});
  CsvWriter eigen(dir / "eigenvalues.csv", {"omega_over_n", "replicate", "k", "lambda_k"});
  std::optional<CsvWriter> estimates, embedding;
  if (cfg.output.embedding) {
    estimates.emplace(dir / "estimates.csv", estimates_header(cfg.model.alphabet, true));
    embedding.emplace(dir / "embedding.csv", embedding_header(r, true, true));
  }

  ExperimentSummary summary;
  for (std::size_t point = 0; point < cfg.sweep.size(); ++point) {
    const double retention = cfg.sweep[point];
    for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
      const std::uint64_t seed = replicate_seed(cfg.root_seed, point, rep);
      try {
        ReplicateRun run = run_replicate(cfg, retention, seed, rep);
        metrics.row(metrics_cells(run.metrics, r));
        timings.row({format_csv(retention), std::to_string(rep), format_csv(run.metrics.wall_clock)});
        const auto& ev = run.inference.state.eigenvalues;
        for (std::size_t k = 0; k < ev.size(); ++k)
          eigen.row({format_csv(retention), std::to_string(rep), std::to_string(k + 1), format_csv(ev[k])});
        if (run.metrics.gap_warning)
          log << "warning: omega/n=" << retention << " replicate " << rep
              << ": eigen-gap below 1e-3 |lambda_1|; r may be too large\n";
        if (rep == 0 && estimates) {
          write_estimates(*estimates, run.graph, run.inference, cfg.output.estimate_pairs, seed, retention);
          write_embedding(*embedding, run.inference.state, &run.graph.attributes, &run.ideal, retention);
        }
        summary.rows.push_back(std::move(run.metrics));
      } catch (const std::exception& e) {
        const std::string msg =
            "omega/n=" + format_csv(retention) + " replicate " + std::to_string(rep) + ": " + e.what();
        log << "error: " << msg << '\n';
        summary.failures.push_back(msg);
      }
    }
  }
  write_manifest(dir, cfg, "experiment", summary.failures);
  return summary;
}

// ---------------------------------------------------------------------------
// Tree sweep
// ---------------------------------------------------------------------------

struct TreeSweepRow {
  double omega = 0.0;
  std::uint32_t depth = 0;
  double mean_abs_dev = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double survival = 0.0;
};

inline std::vector<TreeSweepRow> run_tree_sweep(const TreeSweepConfig& tc, std::uint64_t seed) {
  std::vector<TreeSweepRow> rows;
  for (std::size_t k = 0; k < tc.omegas.size(); ++k) {
    SparseParams p = tc.params;
    p.omega = tc.omegas[k];
    const std::uint64_t point_seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    const auto dev = posterior_deviation(p, tc.depths, tc.trials, point_seed);
    for (std::size_t d = 0; d < tc.depths.size(); ++d) {
      const auto surv = coupling_survival(p, tc.depths[d], tc.coupling_trials,
                                          derive_seed(point_seed, static_cast<std::uint64_t>(d)));
      rows.push_back({p.omega, tc.depths[d], dev[d].mean, dev[d].ci_lo, dev[d].ci_hi, surv.estimate});
    }
  }
  return rows;
}

inline void write_tree_sweep(const std::filesystem::path& path, const std::vector<TreeSweepRow>& rows) {
  CsvWriter out(path, {"omega", "R", "mean_abs_dev", "ci_lo", "ci_hi", "survival"});
  for (const auto& r : rows)
    out.row({format_csv(r.omega), std::to_string(r.depth), format_csv(r.mean_abs_dev), format_csv(r.ci_lo),
             format_csv(r.ci_hi), format_csv(r.survival)});
}

// ---------------------------------------------------------------------------
// Spectrum export
// ---------------------------------------------------------------------------

inline OperatorSpectrum configured_spectrum(const ExperimentConfig& cfg) {
  const ModelSpec spec = cfg.model_at(cfg.sweep.front());
  const WeighingFunction w = cfg.spectrum.weights
                                 ? weighing_from_map(spec.alphabet, *cfg.spectrum.weights, WeightMode::raw)
                                 : WeighingFunction::unit(spec.alphabet);
  using Method = SpectrumConfig::Method;
  const bool fourier = cfg.spectrum.method == Method::fourier ||
                       (cfg.spectrum.method == Method::automatic &&
                        std::holds_alternative<FourierKernel>(spec.kernel));
  if (fourier) return fourier_spectrum(spec.kernel, w, cfg.spectrum.harmonics);
  return nystrom_spectrum(spec.space, spec.kernel, w, cfg.spectrum.quadrature, 0);
}

inline void write_spectrum(const std::filesystem::path& path, const OperatorSpectrum& s, std::size_t count) {
  CsvWriter out(path, {"k", "lambda_k"});
  for (std::size_t k = 0; k < std::min(count, s.eigenvalues.size()); ++k)
    out.row({std::to_string(k + 1), format_csv(s.eigenvalues[k])});
}

}  // namespace gsbm
