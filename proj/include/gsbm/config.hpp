#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsbm/eigensolver.hpp"
#include "gsbm/model.hpp"
#include "gsbm/tree_threshold.hpp"
#include "gsbm/weighing.hpp"

namespace gsbm {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlgorithmConfig {
  std::size_t r = 3;
  std::optional<double> epsilon;  ///< nullopt selects half the median pairwise distance
  std::optional<std::map<std::string, double>> weights;  ///< nullopt draws W at random
  WeightMode weight_mode = WeightMode::raw;
  double tol = 1e-8;
  std::size_t subsample = 200000;
  EigenMethod method = EigenMethod::automatic;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::size_t estimate_pairs = 10000;  ///< 0 writes every ordered pair
  bool literal_mu_nmse = false;
  bool embedding = true;
};

struct SpectrumConfig {
  enum class Method { automatic, fourier, nystrom } method = Method::automatic;
  std::size_t quadrature = 2000;
  std::size_t harmonics = 512;
  std::size_t count = 50;
  std::optional<std::map<std::string, double>> weights;  ///< nullopt uses unit weights
};

struct TreeSweepConfig {
  SparseParams params;
  std::vector<double> omegas;
  std::vector<std::uint32_t> depths{2, 4, 6, 8, 10};
  std::size_t trials = 500;
  std::size_t coupling_trials = 10000;
};

struct ExperimentConfig {
  ModelSpec model;
  double omega_over_n = 0.6;
  AlgorithmConfig algorithm;
  std::vector<double> sweep;
  std::uint64_t root_seed = 0;
  std::size_t replicates = 1;
  OutputConfig output;
  SpectrumConfig spectrum;
  std::optional<TreeSweepConfig> tree;
  std::string canonical;  ///< normalized JSON text of the parsed document

  /// Model with omega = omega_over_n * n.
  ModelSpec model_at(double retention) const {
    ModelSpec m = model;
    m.omega = retention * static_cast<double>(m.n);
    return m;
  }
};

namespace detail {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline void known_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ConfigError("unknown config key '" + where + "." + k + "'");
  }
}

inline std::map<std::string, double> parse_weight_map(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must map label names to numbers");
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError(where + "." + k + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

inline LabelRule parse_label_rule(const std::string& s) {
  if (s == "single") return LabelRule::single;
  if (s == "plus_minus") return LabelRule::plus_minus;
  throw ConfigError("label_rule must be 'single' or 'plus_minus'");
}

inline KernelSpec parse_kernel(const json& j) {
  const auto type = get_or<std::string>(j, "type", "fourier");
  if (type == "fourier") {
    known_keys(j, "model.kernel", {"type", "profile", "g0", "gk", "label_rule"});
    const auto rule = parse_label_rule(get_or<std::string>(j, "label_rule", "single"));
    const auto profile = get_or<std::string>(j, "profile", "absolute_value");
    if (profile == "absolute_value") return FourierKernel::absolute_value(rule);
    if (profile == "quarter_indicator") return FourierKernel::quarter_indicator(rule);
    if (profile == "series")
      return FourierKernel::series(get_or<double>(j, "g0", 0.0),
                                   get_or<std::vector<double>>(j, "gk", {}), rule);
    throw ConfigError("unknown Fourier profile '" + profile + "'");
  }
  if (type == "block") {
    known_keys(j, "model.kernel", {"type", "B", "mu"});
    const auto rows = get_or<std::vector<std::vector<double>>>(j, "B", {});
    if (rows.empty()) throw ConfigError("block kernel needs a nonempty B");
    Eigen::MatrixXd b(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t x = 0; x < rows.size(); ++x) {
      if (rows[x].size() != rows.size()) throw ConfigError("block kernel B must be square");
      for (std::size_t y = 0; y < rows.size(); ++y)
        b(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = rows[x][y];
    }
    if (!j.contains("mu")) return BlockKernel::unlabeled(std::move(b));
    const auto mu = get_or<std::vector<std::vector<std::vector<double>>>>(j, "mu", {});
    BlockKernel k{std::move(b), {}};
    if (mu.size() != rows.size()) throw ConfigError("block kernel mu must be r x r label laws");
    for (const auto& row : mu) {
      if (row.size() != rows.size()) throw ConfigError("block kernel mu must be r x r label laws");
      for (const auto& law : row) k.mu.push_back(law);
    }
    return k;
  }
  throw ConfigError("kernel type must be 'fourier' or 'block'");
}

inline AttributeSpace parse_space(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "unit_interval") return UnitInterval{};
    throw ConfigError("space must be 'unit_interval' or {\"finite\": [weights]}");
  }
  known_keys(j, "model.space", {"finite"});
  return FiniteSet{get_or<std::vector<double>>(j, "finite", {})};
}

inline SparseParams parse_sparse(const json& j) {
  SparseParams p;
  p.r = get_or<std::size_t>(j, "r", 2);
  p.a = get_or<double>(j, "a", 1.0);
  p.b = get_or<double>(j, "b", 1.0);
  p.mu = get_or<std::vector<double>>(j, "mu", {1.0});
  p.nu = get_or<std::vector<double>>(j, "nu", {1.0});
  return p;
}

}  // namespace detail

/// Parses an experiment description. Schema (all sections optional except model.n):
///
///   schema_version: 1
///   model: { n, space: "unit_interval" | {finite: [P]},
///            kernel: {type: "fourier", profile: "absolute_value" | "quarter_indicator" | "series",
///                     g0, gk: [...], label_rule: "single" | "plus_minus"}
///                  | {type: "block", B: [[...]], mu: [[[law]]]},
///            labels: [names], omega_over_n }
///   algorithm: { r, epsilon: "median" | number, weights: "random" | {label: w},
///                weight_mode: "raw" | "rescaled", tol, subsample,
///                eigensolver: "auto" | "lanczos" | "dense" }
///   sweep: [omega_over_n, ...]
///   seeds: { root, replicates }
///   output: { dir, estimate_pairs, literal_mu_nmse, embedding }
///   spectrum: { method: "auto" | "fourier" | "nystrom", quadrature, harmonics, count, weights }
///   tree: { r, a, b, mu: [...], nu: [...], omegas: [...], depths: [...], trials, coupling_trials }
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using detail::get_or;
  using detail::known_keys;
  known_keys(doc, "config",
             {"schema_version", "model", "algorithm", "sweep", "seeds", "output", "spectrum", "tree"});
  const int version = get_or<int>(doc, "schema_version", -1);
  if (version != kSchemaVersion)
    throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));

  ExperimentConfig c;
  c.canonical = doc.dump();

  if (!doc.contains("model")) throw ConfigError("config needs a model section");
  const auto& m = doc.at("model");
  known_keys(m, "model", {"n", "space", "kernel", "labels", "omega_over_n"});
  if (!m.contains("n")) throw ConfigError("model.n is required");
  c.model.n = get_or<std::size_t>(m, "n", 0);
  if (m.contains("space")) c.model.space = detail::parse_space(m.at("space"));
  if (m.contains("kernel")) c.model.kernel = detail::parse_kernel(m.at("kernel"));
  try {
    if (m.contains("labels")) c.model.alphabet = LabelAlphabet(get_or<std::vector<std::string>>(m, "labels", {}));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.omega_over_n = get_or<double>(m, "omega_over_n", 0.6);

  if (doc.contains("algorithm")) {
    const auto& a = doc.at("algorithm");
    known_keys(a, "algorithm",
               {"r", "epsilon", "weights", "weight_mode", "tol", "subsample", "eigensolver"});
    c.algorithm.r = get_or<std::size_t>(a, "r", 3);
    if (a.contains("epsilon")) {
      const auto& e = a.at("epsilon");
      if (e.is_number()) {
        c.algorithm.epsilon = e.get<double>();
        if (!(*c.algorithm.epsilon > 0.0)) throw ConfigError("algorithm.epsilon must be positive");
      } else if (!(e.is_string() && e.get<std::string>() == "median")) {
        throw ConfigError("algorithm.epsilon must be 'median' or a positive number");
      }
    }
    if (a.contains("weights")) {
      const auto& w = a.at("weights");
      if (!(w.is_string() && w.get<std::string>() == "random"))
        c.algorithm.weights = detail::parse_weight_map(w, "algorithm.weights");
    }
    const auto mode = get_or<std::string>(a, "weight_mode", "raw");
    if (mode == "raw") c.algorithm.weight_mode = WeightMode::raw;
    else if (mode == "rescaled") c.algorithm.weight_mode = WeightMode::rescaled;
    else throw ConfigError("algorithm.weight_mode must be 'raw' or 'rescaled'");
    c.algorithm.tol = get_or<double>(a, "tol", 1e-8);
    c.algorithm.subsample = get_or<std::size_t>(a, "subsample", 200000);
    const auto solver = get_or<std::string>(a, "eigensolver", "auto");
    if (solver == "auto") c.algorithm.method = EigenMethod::automatic;
    else if (solver == "lanczos") c.algorithm.method = EigenMethod::lanczos;
    else if (solver == "dense") c.algorithm.method = EigenMethod::dense;
    else throw ConfigError("algorithm.eigensolver must be 'auto', 'lanczos' or 'dense'");
    if (c.algorithm.r < 1) throw ConfigError("algorithm.r must be at least 1");
  }

  c.sweep = get_or<std::vector<double>>(doc, "sweep", {c.omega_over_n});
  if (c.sweep.empty()) throw ConfigError("sweep must not be empty");
  for (double s : c.sweep)
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("sweep values must lie in (0, 1]");

  if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    known_keys(s, "seeds", {"root", "replicates"});
    c.root_seed = get_or<std::uint64_t>(s, "root", 0);
    c.replicates = get_or<std::size_t>(s, "replicates", 1);
    if (c.replicates < 1) throw ConfigError("seeds.replicates must be at least 1");
  }

  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    known_keys(o, "output", {"dir", "estimate_pairs", "literal_mu_nmse", "embedding"});
    c.output.dir = get_or<std::string>(o, "dir", "out");
    c.output.estimate_pairs = get_or<std::size_t>(o, "estimate_pairs", 10000);
    c.output.literal_mu_nmse = get_or<bool>(o, "literal_mu_nmse", false);
    c.output.embedding = get_or<bool>(o, "embedding", true);
  }

  if (doc.contains("spectrum")) {
    const auto& s = doc.at("spectrum");
    known_keys(s, "spectrum", {"method", "quadrature", "harmonics", "count", "weights"});
    const auto method = get_or<std::string>(s, "method", "auto");
    if (method == "auto") c.spectrum.method = SpectrumConfig::Method::automatic;
    else if (method == "fourier") c.spectrum.method = SpectrumConfig::Method::fourier;
    else if (method == "nystrom") c.spectrum.method = SpectrumConfig::Method::nystrom;
    else throw ConfigError("spectrum.method must be 'auto', 'fourier' or 'nystrom'");
    c.spectrum.quadrature = get_or<std::size_t>(s, "quadrature", 2000);
    c.spectrum.harmonics = get_or<std::size_t>(s, "harmonics", 512);
    c.spectrum.count = get_or<std::size_t>(s, "count", 50);
    if (s.contains("weights")) c.spectrum.weights = detail::parse_weight_map(s.at("weights"), "spectrum.weights");
  }

  if (doc.contains("tree")) {
    const auto& t = doc.at("tree");
    known_keys(t, "tree", {"r", "a", "b", "mu", "nu", "omegas", "depths", "trials", "coupling_trials"});
    TreeSweepConfig tc;
    tc.params = detail::parse_sparse(t);
    tc.omegas = get_or<std::vector<double>>(t, "omegas", {});
    tc.depths = get_or<std::vector<std::uint32_t>>(t, "depths", tc.depths);
    tc.trials = get_or<std::size_t>(t, "trials", 500);
    tc.coupling_trials = get_or<std::size_t>(t, "coupling_trials", 10000);
    if (tc.omegas.empty()) throw ConfigError("tree.omegas must not be empty");
    for (double w : tc.omegas)
      if (!(w >= 0.0)) throw ConfigError("tree.omegas must be nonnegative");
    for (auto d : tc.depths)
      if (d > kMaxTreeDepth) throw ConfigError("tree.depths are capped at 30");
    try {
      tc.params.omega = tc.omegas.front();
      tc.params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("tree: ") + e.what());
    }
    c.tree = std::move(tc);
  }

  try {
    c.model_at(c.sweep.front()).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gsbm
