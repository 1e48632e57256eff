// Samples a graph from the |x| kernel on the circle, embeds it, and compares the
// eigenvalue ratios and the embedding with their operator counterparts.
#include <cstdio>
#include <numbers>
#include <string>

#include "gsbm/gsbm.hpp"

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoul(argv[1]) : 800;
  const double retention = argc > 2 ? std::stod(argv[2]) : 0.6;
  const std::uint64_t seed = 42;

  gsbm::ModelSpec spec;
  spec.n = n;
  spec.kernel = gsbm::FourierKernel::absolute_value();
  spec.omega = retention * static_cast<double>(n);

  const auto graph = gsbm::generate_graph(spec, gsbm::sample_attributes(spec, seed), seed);
  gsbm::AlgorithmConfig algo;
  algo.r = 3;
  const auto res = gsbm::run_algorithm(graph, algo, seed);
  const auto op = gsbm::model_spectrum(spec, res.weighing);

  std::printf("n=%zu edges=%zu epsilon=%.4f\n", n, graph.edges.size(), res.epsilon);
  const auto ratios = res.state.ratios();
  for (std::size_t k = 0; k < ratios.size(); ++k)
    std::printf("lambda_%zu/lambda_1: graph %+.4f  operator %+.4f\n", k + 1, ratios[k],
                op.eigenvalues[k] / op.eigenvalues[0]);
  std::printf("-4/pi^2 = %+.4f\n", -4.0 / (std::numbers::pi * std::numbers::pi));
  if (const auto resid = gsbm::embedding_residual(res, op, graph.attributes))
    std::printf("normalized Procrustes residual on (z_2, z_3): %.4f\n", *resid);
  return 0;
}
