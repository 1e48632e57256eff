#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gsbm/harness.hpp"

using namespace gsbm;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gsbm_test_" + name);
  fs::remove_all(dir);
  return dir;
}

nlohmann::json small_config(const fs::path& dir) {
  auto j = nlohmann::json::parse(R"({
    "schema_version": 1,
    "model": {"n": 160, "kernel": {"type": "fourier", "profile": "absolute_value",
                                   "label_rule": "plus_minus"},
              "labels": ["+1", "-1"], "omega_over_n": 0.6},
    "algorithm": {"r": 3, "weights": {"+1": 1, "-1": -1}},
    "sweep": [0.4, 0.6],
    "seeds": {"root": 5, "replicates": 2},
    "output": {"estimate_pairs": 300},
    "tree": {"r": 2, "a": 3, "b": 1, "omegas": [2, 5], "depths": [1, 3], "trials": 50,
             "coupling_trials": 200}
  })");
  j["output"]["dir"] = dir.string();
  return j;
}

}  // namespace

TEST_CASE("baseline of a complete single-label graph is one") {
  LabeledGraph g;
  g.n = 5;
  for (NodeId i = 0; i < 5; ++i)
    for (NodeId j = i + 1; j < 5; ++j) g.edges.push_back({i, j, 0});
  const Adjacency adj(g);
  const auto base = baseline_estimates(g, adj);
  for (NodeId i = 0; i < 5; ++i) {
    CHECK(base.b(i, (i + 1) % 5) == 1.0);
    CHECK(base.mu(i, (i + 1) % 5, 0) == 1.0);
  }
}

TEST_CASE("baseline label shares count the edges at the first node") {
  LabeledGraph g;
  g.n = 5;
  g.alphabet = LabelAlphabet({"+1", "-1"});
  g.edges = {{0, 1, 0}, {0, 2, 0}, {0, 3, 1}};
  const Adjacency adj(g);
  const auto base = baseline_estimates(g, adj);
  CHECK_THAT(base.mu(0, 4, 0), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(base.b(0, 4), WithinAbs(3.0 / 4.0, 1e-15));
  // Node 4 is isolated: uniform label law.
  CHECK(base.mu(4, 0, 0) == 0.5);
  CHECK(base.mu(4, 0, 1) == 0.5);
  CHECK(base.b(4, 0) == 0.0);
}

TEST_CASE("nmse trivial cases") {
  const std::vector<double> truth{0.1, 0.2, 0.3};
  const std::vector<double> base{0.2, 0.2, 0.2};
  CHECK(nmse(truth, truth, base) == 0.0);
  CHECK(nmse(base, truth, base) == 1.0);
  REQUIRE_THROWS_AS(nmse(base, truth, truth), std::domain_error);
  REQUIRE_THROWS(nmse(base, {0.1}, base));
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config(small_config("x"));
  CHECK(cfg.model.n == 160);
  CHECK(cfg.model.alphabet.size() == 2);
  CHECK(cfg.algorithm.weights.has_value());
  CHECK(cfg.algorithm.weight_mode == WeightMode::raw);
  CHECK(cfg.sweep == std::vector<double>{0.4, 0.6});
  CHECK(cfg.replicates == 2);
  CHECK(cfg.model_at(0.5).omega == 80.0);
  REQUIRE(cfg.tree.has_value());
  CHECK(cfg.tree->params.a == 3.0);

  auto bad = small_config("x");
  bad["schema_version"] = 2;
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
  bad = small_config("x");
  bad["model"]["colour"] = 1;
  REQUIRE_THROWS_WITH(parse_config(bad), Catch::Matchers::ContainsSubstring("model.colour"));
  bad = small_config("x");
  bad["sweep"] = {1.5};
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
  bad = small_config("x");
  bad["model"]["labels"] = {"+1"};
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
  bad = small_config("x");
  bad["algorithm"]["epsilon"] = -1;
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
  bad = small_config("x");
  bad["seeds"]["replicates"] = 0;
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("block kernel configs") {
  auto j = nlohmann::json::parse(R"({
    "schema_version": 1,
    "model": {"n": 50, "space": {"finite": [0.5, 0.5]},
              "kernel": {"type": "block", "B": [[0.9, 0.1], [0.1, 0.9]],
                         "mu": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]},
              "labels": ["a", "b"], "omega_over_n": 0.5}
  })");
  const auto cfg = parse_config(j);
  const auto& bk = std::get<BlockKernel>(cfg.model.kernel);
  CHECK(bk.label_law(0, 1) == std::vector<double>{0.0, 1.0});
  j["model"]["kernel"]["B"] = {{0.9, 0.1}, {0.2, 0.9}};
  REQUIRE_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("pair samples are sorted, distinct and off-diagonal") {
  const auto all = estimate_pair_sample(5, 0, 1);
  CHECK(all.size() == 20);
  const auto some = estimate_pair_sample(30, 100, 1);
  REQUIRE(some.size() == 100);
  for (std::size_t k = 0; k < some.size(); ++k) {
    CHECK(some[k].first != some[k].second);
    if (k) CHECK(some[k - 1] < some[k]);
  }
}

TEST_CASE("literal labeled NMSE differs from the consistent one") {
  auto cfg = parse_config(small_config("x"));
  const auto spec = cfg.model_at(0.6);
  const auto g = generate_graph(spec, sample_attributes(spec, 3), 3);
  const Adjacency adj(g);
  const auto res = run_algorithm(g, cfg.algorithm, 3);
  const auto consistent = evaluate_estimates(g, adj, res, spec, false);
  const auto literal = evaluate_estimates(g, adj, res, spec, true);
  REQUIRE(consistent.nmse_mu.has_value());
  CHECK(consistent.nmse_b == literal.nmse_b);
  CHECK(*consistent.nmse_mu != *literal.nmse_mu);
}

TEST_CASE("experiment output is deterministic") {
  const auto d1 = scratch("run1");
  const auto d2 = scratch("run2");
  auto c1 = parse_config(small_config(d1));
  auto c2 = parse_config(small_config(d2));
  std::ostringstream log;
  const auto s1 = run_experiment(c1, log);
  run_experiment(c2, log);
  REQUIRE(s1.failures.empty());
  REQUIRE(s1.rows.size() == 4);
  for (const char* f : {"metrics.csv", "eigenvalues.csv", "estimates.csv", "embedding.csv"})
    CHECK(slurp(d1 / f) == slurp(d2 / f));

  std::istringstream metrics(slurp(d1 / "metrics.csv"));
  std::string header;
  std::getline(metrics, header);
  CHECK(header ==
        "omega_over_n,replicate,seed,nmse_b,nmse_mu,epsilon,eigen_gap,procrustes_residual,ratio_1,ratio_2,"
        "ratio_3,ratio_4");
  std::size_t lines = 0;
  for (std::string line; std::getline(metrics, line);) {
    ++lines;
    CHECK(line.find("nan") == std::string::npos);
    CHECK(line.find("inf") == std::string::npos);
  }
  CHECK(lines == 4);
  for (const auto& row : s1.rows) {
    CHECK(row.nmse_b >= 0.0);
    CHECK(row.nmse_mu.has_value());
    CHECK(row.eigen_ratios.front() == 1.0);
  }
  // Estimates file holds replicate 0 of each sweep point.
  std::istringstream est(slurp(d1 / "estimates.csv"));
  std::getline(est, header);
  CHECK(header == "omega_over_n,i,j,bhat,muhat_+1,muhat_-1");
  std::size_t est_lines = 0;
  for (std::string line; std::getline(est, line);) ++est_lines;
  CHECK(est_lines == 600);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("single-label runs leave nmse_mu empty") {
  const auto dir = scratch("unlabeled");
  auto j = small_config(dir);
  j["model"]["labels"] = {"1"};
  j["model"]["kernel"]["label_rule"] = "single";
  j["algorithm"].erase("weights");
  j["sweep"] = {0.6};
  j["seeds"]["replicates"] = 1;
  const auto cfg = parse_config(j);
  std::ostringstream log;
  const auto s = run_experiment(cfg, log);
  REQUIRE(s.rows.size() == 1);
  CHECK_FALSE(s.rows[0].nmse_mu.has_value());
  std::istringstream metrics(slurp(dir / "metrics.csv"));
  std::string line;
  std::getline(metrics, line);
  std::getline(metrics, line);
  // nmse_mu is the fifth column.
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  CHECK(cells.at(4).empty());
  fs::remove_all(dir);
}

TEST_CASE("failing replicates are reported and the rest still run") {
  const auto dir = scratch("failing");
  auto j = small_config(dir);
  j["algorithm"]["r"] = 200;  // larger than n
  j["seeds"]["replicates"] = 1;
  const auto cfg = parse_config(j);
  std::ostringstream log;
  const auto s = run_experiment(cfg, log);
  CHECK(s.rows.empty());
  CHECK(s.failures.size() == 2);
  CHECK(log.str().find("omega/n=0.4") != std::string::npos);
  CHECK(slurp(dir / "run.json").find("failures") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("tree sweep rows") {
  const auto cfg = parse_config(small_config("x"));
  const auto rows = run_tree_sweep(*cfg.tree, 9);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].omega == 2.0);
  CHECK(rows[1].depth == 3);
  for (const auto& r : rows) {
    CHECK(r.ci_lo <= r.mean_abs_dev);
    CHECK(r.mean_abs_dev <= r.ci_hi);
    CHECK(r.survival >= 0.0);
  }
  const auto dir = scratch("tree");
  fs::create_directories(dir);
  write_tree_sweep(dir / "t.csv", rows);
  CHECK(slurp(dir / "t.csv").rfind("omega,R,mean_abs_dev,ci_lo,ci_hi,survival\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("spectrum export") {
  auto cfg = parse_config(small_config("x"));
  cfg.spectrum.weights = std::map<std::string, double>{{"+1", 1.0}, {"-1", -1.0}};
  const auto s = configured_spectrum(cfg);
  CHECK_THAT(s.eigenvalues[0], WithinAbs(-1.0 / (std::numbers::pi * std::numbers::pi), 1e-15));
  const auto dir = scratch("spectrum");
  fs::create_directories(dir);
  write_spectrum(dir / "s.csv", s, 3);
  std::istringstream in(slurp(dir / "s.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,lambda_k");
  std::getline(in, line);
  CHECK(line.rfind("1,-0.101321", 0) == 0);
  fs::remove_all(dir);
}
