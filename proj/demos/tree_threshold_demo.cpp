// Threshold quantities for a three-community sparse model and the decay of the root
// posterior below omega_0.
#include <cstdio>

#include "gsbm/tree_threshold.hpp"

int main() {
  gsbm::SparseParams p;
  p.r = 3;
  p.a = 4.0;
  p.b = 1.0;
  p.mu = {1.0};
  p.nu = {1.0};
  p.omega = 4.0;

  const auto th = gsbm::thresholds(p);
  std::printf("tau=%.4f omega0=%.4f omega_c=%.4f d=%.4f omega*tau=%.4f\n", th.tau, th.omega0, th.omega_c,
              th.offspring_mean, th.branching_number);

  const auto dev = gsbm::posterior_deviation(p, {2, 4, 6, 8, 10}, 300, 1);
  for (const auto& d : dev)
    std::printf("R=%2u  E|P(root) - 1/3| = %.4f  [%.4f, %.4f]\n", d.depth, d.mean, d.ci_lo, d.ci_hi);

  for (std::uint32_t depth : {5u, 10u, 20u}) {
    const auto s = gsbm::coupling_survival(p, depth, 2000, 2);
    std::printf("coupling survival at R=%2u: %.4f\n", depth, s.estimate);
  }
  return 0;
}
