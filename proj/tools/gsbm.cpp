#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gsbm/gsbm.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Root seed, overrides seeds.root");
  cmd->add_option("--out", args.out, "Output directory, overrides output.dir");
}

gsbm::ExperimentConfig load(const CommonArgs& args) {
  gsbm::ExperimentConfig cfg = gsbm::load_config(args.config);
  if (args.seed) cfg.root_seed = *args.seed;
  if (args.out) cfg.output.dir = *args.out;
  fs::create_directories(cfg.output.dir);
  return cfg;
}

int cmd_generate(const CommonArgs& args) {
  const auto cfg = load(args);
  const double retention = cfg.sweep.front();
  const auto spec = cfg.model_at(retention);
  const auto seed = gsbm::replicate_seed(cfg.root_seed, 0, 0);
  const auto graph = gsbm::generate_graph(spec, gsbm::sample_attributes(spec, seed), seed);
  gsbm::write_text_file(cfg.output.dir / "graph.txt", [&](std::ostream& o) { gsbm::write_edge_list(o, graph); });
  gsbm::write_text_file(cfg.output.dir / "attributes.txt",
                        [&](std::ostream& o) { gsbm::write_attributes(o, graph.attributes); });
  gsbm::write_manifest(cfg.output.dir, cfg, "generate");
  std::cout << "n=" << graph.n << " edges=" << graph.edges.size() << " omega/n=" << retention << '\n';
  return 0;
}

int cmd_spectrum(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto s = gsbm::configured_spectrum(cfg);
  gsbm::write_spectrum(cfg.output.dir / "spectrum.csv", s, cfg.spectrum.count);
  gsbm::write_manifest(cfg.output.dir, cfg, "spectrum");
  const std::size_t r = std::min(cfg.algorithm.r, s.eigenvalues.size());
  const auto tail = gsbm::tail_epsilon_r(s, r);
  std::cout << "lambda_1=" << gsbm::format_csv(s.eigenvalues.front()) << " eps_" << r << "="
            << gsbm::format_csv(tail.value) << (tail.truncated ? " (discretized)" : "") << '\n';
  return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& graph_path, const std::string& attr_path) {
  const auto cfg = load(args);
  const double retention = cfg.sweep.front();
  const auto seed = gsbm::replicate_seed(cfg.root_seed, 0, 0);
  gsbm::LabeledGraph graph;
  if (graph_path.empty()) {
    const auto spec = cfg.model_at(retention);
    graph = gsbm::generate_graph(spec, gsbm::sample_attributes(spec, seed), seed);
  } else {
    auto in = gsbm::open_input(graph_path);
    graph = gsbm::read_edge_list(in);
    if (!attr_path.empty()) {
      auto ain = gsbm::open_input(attr_path);
      graph.attributes = gsbm::read_attributes(ain);
    }
    graph.validate();
  }

  const auto res = gsbm::run_algorithm(graph, cfg.algorithm, seed);
  if (res.gap_warning) std::cerr << "warning: eigen-gap below 1e-3 |lambda_1|; r may be too large\n";
  const bool truth = graph.attributes.size() == graph.n;

  {
    gsbm::CsvWriter ev(cfg.output.dir / "eigenvalues.csv", {"k", "lambda_k"});
    for (std::size_t k = 0; k < res.state.eigenvalues.size(); ++k)
      ev.row({std::to_string(k + 1), gsbm::format_csv(res.state.eigenvalues[k])});
  }
  {
    gsbm::CsvWriter est(cfg.output.dir / "estimates.csv", gsbm::estimates_header(graph.alphabet, false));
    gsbm::write_estimates(est, graph, res, cfg.output.estimate_pairs, seed, std::nullopt);
  }

  Eigen::MatrixXd ideal;
  if (truth) {
    const auto spec = cfg.model_at(retention);
    const auto op = gsbm::model_spectrum(spec, res.weighing, cfg.spectrum.harmonics);
    if (op.eigenvalues.size() >= cfg.algorithm.r && op.eigenfunctions.size() >= cfg.algorithm.r)
      ideal = gsbm::ideal_embedding(op, graph.attributes, cfg.algorithm.r);
    if (graph_path.empty()) {
      const gsbm::Adjacency adj(graph);
      const auto eval = gsbm::evaluate_estimates(graph, adj, res, spec, cfg.output.literal_mu_nmse);
      gsbm::MetricsRow m;
      m.omega_over_n = retention;
      m.seed = seed;
      m.nmse_b = eval.nmse_b;
      m.nmse_mu = eval.nmse_mu;
      m.epsilon = res.epsilon;
      m.eigen_gap = res.state.gap();
      m.eigen_ratios = res.state.ratios();
      if (ideal.size() > 0)
        m.procrustes_residual = gsbm::block_procrustes_residual(res.state.embedding, ideal, op.eigenvalues);
      gsbm::CsvWriter metrics(cfg.output.dir / "metrics.csv", gsbm::metrics_header(cfg.algorithm.r));
      metrics.row(gsbm::metrics_cells(m, cfg.algorithm.r));
      std::cout << "nmse_b=" << gsbm::format_csv(m.nmse_b);
      if (m.nmse_mu) std::cout << " nmse_mu=" << gsbm::format_csv(*m.nmse_mu);
      std::cout << '\n';
    }
  }
  if (cfg.output.embedding) {
    gsbm::CsvWriter emb(cfg.output.dir / "embedding.csv", gsbm::embedding_header(cfg.algorithm.r, truth, false));
    gsbm::write_embedding(emb, res.state, truth ? &graph.attributes : nullptr, truth ? &ideal : nullptr,
                          std::nullopt);
  }
  gsbm::write_manifest(cfg.output.dir, cfg, "infer");
  std::cout << "epsilon=" << gsbm::format_csv(res.epsilon) << " lambda_2/lambda_1="
            << (res.state.eigenvalues.size() > 1 ? gsbm::format_csv(res.state.ratios()[1]) : "n/a") << '\n';
  return 0;
}

int cmd_experiment(const CommonArgs& args) {
  const auto cfg = load(args);
  const auto summary = gsbm::run_experiment(cfg);
  std::cout << summary.rows.size() << " replicate(s) written to " << cfg.output.dir.string() << '\n';
  return summary.failures.empty() ? 0 : 3;
}

int cmd_tree_sweep(const CommonArgs& args) {
  const auto cfg = load(args);
  if (!cfg.tree) throw gsbm::ConfigError("tree-sweep needs a tree section in the config");
  const auto th = gsbm::thresholds([&] {
    auto p = cfg.tree->params;
    p.omega = cfg.tree->omegas.front();
    return p;
  }());
  const auto rows = gsbm::run_tree_sweep(*cfg.tree, cfg.root_seed);
  gsbm::write_tree_sweep(cfg.output.dir / "tree_sweep.csv", rows);
  gsbm::write_manifest(cfg.output.dir, cfg, "tree-sweep");
  std::cout << "tau=" << gsbm::format_csv(th.tau) << " omega0=" << gsbm::format_csv(th.omega0)
            << " omega_c=" << gsbm::format_csv(th.omega_c) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized stochastic block model toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, spec_args, infer_args, exp_args, tree_args;
  std::string graph_path, attr_path;
  auto* gen = app.add_subcommand("generate", "Sample attributes and a labeled graph");
  add_common(gen, gen_args);
  auto* spec = app.add_subcommand("spectrum", "Operator spectrum as k,lambda_k");
  add_common(spec, spec_args);
  auto* infer = app.add_subcommand("infer", "Run the spectral estimators on one graph");
  add_common(infer, infer_args);
  infer->add_option("--graph", graph_path, "Edge list to read instead of sampling")->check(CLI::ExistingFile);
  infer->add_option("--attributes", attr_path, "Attribute file matching --graph")->check(CLI::ExistingFile);
  auto* exp = app.add_subcommand("experiment", "Sweep and replicates with metrics");
  add_common(exp, exp_args);
  auto* tree = app.add_subcommand("tree-sweep", "Galton-Watson posterior and coupling sweep");
  add_common(tree, tree_args);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(gen_args);
    if (*spec) return cmd_spectrum(spec_args);
    if (*infer) return cmd_infer(infer_args, graph_path, attr_path);
    if (*exp) return cmd_experiment(exp_args);
    if (*tree) return cmd_tree_sweep(tree_args);
  } catch (const gsbm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
