#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gsbm/eigensolver.hpp"
#include "gsbm/model.hpp"
#include "gsbm/spectral.hpp"
#include "gsbm/weighing.hpp"

namespace gsbm {

/// Spectrum of the integral operator Tf(x) = int K(x, y) f(y) P(dy) for the weighted kernel
/// K(x, y) = sum_l W(l) B(x, y) mu_{x,y}(l).
///
/// Eigenvalues are sorted by |.| descending. `eigenfunctions` may be shorter than
/// `eigenvalues` (quadrature spectra keep only the leading ones). `energy` is the squared
/// Hilbert-Schmidt norm sum_k lambda_k^2 of the whole operator.
struct OperatorSpectrum {
  std::vector<double> eigenvalues;
  std::vector<std::function<double(double)>> eigenfunctions;
  double energy = 0.0;
  bool complete = false;    ///< eigenvalues list every nonzero eigenvalue
  bool quadrature = false;  ///< values are discretization estimates
};

/// Even 1-periodic profile c0 + sum_{k>=1} c_k cos(2 pi k x) known through its coefficients.
struct CosineSeries {
  std::function<double(std::size_t)> coefficient;
  std::function<double(double)> value;
  std::optional<std::size_t> degree;  ///< nullopt for infinite expansions
  double energy = 0.0;                ///< int_0^1 f^2
};

namespace detail {

struct ProfileMoments {
  std::function<double(std::size_t)> square_coefficient;  // coefficients of g^2
  std::optional<std::size_t> square_degree;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;  // int g^2, g^3, g^4
};

inline ProfileMoments profile_moments(const FourierKernel& g) {
  constexpr double pi = std::numbers::pi;
  ProfileMoments pm;
  switch (g.profile) {
    case FourierProfile::absolute_value:
      pm.square_coefficient = [](std::size_t k) {
        if (k == 0) return 1.0 / 12.0;
        const double kk = static_cast<double>(k);
        return (k % 2 == 0 ? 1.0 : -1.0) / (pi * pi * kk * kk);
      };
      pm.m2 = 1.0 / 12.0;
      pm.m3 = 1.0 / 32.0;
      pm.m4 = 1.0 / 80.0;
      return pm;
    case FourierProfile::quarter_indicator:
      pm.square_coefficient = [g](std::size_t k) { return g.coefficient(k); };
      pm.m2 = pm.m3 = pm.m4 = 0.5;
      return pm;
    case FourierProfile::series:
      break;
  }
  // Finite series: work with two-sided coefficients a_{-D..D}.
  const std::size_t d = g.gk.size();
  std::vector<double> two(2 * d + 1, 0.0);
  two[d] = g.g0;
  for (std::size_t k = 1; k <= d; ++k) two[d + k] = two[d - k] = 0.5 * g.gk[k - 1];
  std::vector<double> sq(4 * d + 1, 0.0);
  for (std::size_t a = 0; a < two.size(); ++a)
    for (std::size_t b = 0; b < two.size(); ++b) sq[a + b] += two[a] * two[b];
  // sq index s corresponds to frequency s - 2d.
  for (std::size_t k = 0; k < two.size(); ++k) pm.m2 += two[k] * two[two.size() - 1 - k];
  for (std::size_t k = 0; k < two.size(); ++k)
    pm.m3 += sq[k + d] * two[two.size() - 1 - k];  // <g^2, g>
  for (std::size_t k = 0; k < sq.size(); ++k) pm.m4 += sq[k] * sq[sq.size() - 1 - k];
  auto shared = std::make_shared<std::vector<double>>(std::move(sq));
  pm.square_coefficient = [shared, d](std::size_t k) {
    if (k > 2 * d) return 0.0;
    const double c = (*shared)[2 * d + k];
    return k == 0 ? c : 2.0 * c;
  };
  pm.square_degree = 2 * d;
  return pm;
}

}  // namespace detail

/// Profile k(x - y) = sum_l W(l) g(x - y) mu_{x,y}(l) of the weighted kernel.
inline CosineSeries effective_profile(const FourierKernel& g, const WeighingFunction& w) {
  CosineSeries out;
  const auto pm = detail::profile_moments(g);
  if (g.label_rule == LabelRule::single) {
    if (w.size() != 1) throw std::invalid_argument("single label rule needs one weight");
    const double w0 = w[0];
    out.coefficient = [g, w0](std::size_t k) { return w0 * g.coefficient(k); };
    out.value = [g, w0](double x) { return w0 * g(x); };
    out.degree = g.degree();
    out.energy = w0 * w0 * pm.m2;
    return out;
  }
  if (w.size() != 2) throw std::invalid_argument("plus/minus label rule needs two weights");
  // W+ 2g^2 + W- (g - 2g^2) = alpha g^2 + beta g
  const double alpha = 2.0 * (w[0] - w[1]);
  const double beta = w[1];
  auto sqc = pm.square_coefficient;
  out.coefficient = [g, sqc, alpha, beta](std::size_t k) {
    return alpha * sqc(k) + beta * g.coefficient(k);
  };
  out.value = [g, alpha, beta](double x) {
    const double v = g(x);
    return alpha * v * v + beta * v;
  };
  if (g.degree()) out.degree = alpha != 0.0 ? pm.square_degree : g.degree();
  out.energy = alpha * alpha * pm.m4 + 2.0 * alpha * beta * pm.m3 + beta * beta * pm.m2;
  return out;
}

/// Weighted kernel K(x, y) evaluated pointwise from B and mu.
inline std::function<double(double, double)> effective_kernel(const KernelSpec& kernel,
                                                              const WeighingFunction& w) {
  return [kernel, w](double x, double y) {
    std::vector<double> law;
    label_probabilities(kernel, x, y, law);
    if (law.size() != w.size()) throw std::invalid_argument("weights and label law differ in size");
    double s = 0.0;
    for (std::size_t l = 0; l < law.size(); ++l) s += w[static_cast<LabelId>(l)] * law[l];
    return edge_probability(kernel, x, y) * s;
  };
}

/// Closed-form spectrum of a translation-invariant kernel on the unit interval: the mean
/// coefficient c0 with eigenfunction 1, and c_k / 2 twice for each harmonic k with
/// eigenfunctions sqrt(2) cos(2 pi k x) then sqrt(2) sin(2 pi k x). Zero eigenvalues are
/// omitted. Infinite expansions are listed up to `harmonics`.
inline OperatorSpectrum fourier_spectrum(const KernelSpec& kernel, const WeighingFunction& w,
                                         std::size_t harmonics = 512) {
  const auto* fk = std::get_if<FourierKernel>(&kernel);
  if (fk == nullptr)
    throw std::invalid_argument(
        "kernel is not translation invariant; use nystrom_spectrum instead");
  const CosineSeries prof = effective_profile(*fk, w);
  const std::size_t top = prof.degree.value_or(harmonics);

  struct Entry {
    double value;
    std::function<double(double)> fn;
  };
  std::vector<Entry> entries;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double root2 = std::numbers::sqrt2;
  if (const double c0 = prof.coefficient(0); c0 != 0.0)
    entries.push_back({c0, [](double) { return 1.0; }});
  for (std::size_t k = 1; k <= top; ++k) {
    const double half = 0.5 * prof.coefficient(k);
    if (half == 0.0) continue;
    const double kk = static_cast<double>(k);
    entries.push_back({half, [=](double x) { return root2 * std::cos(two_pi * kk * x); }});
    entries.push_back({half, [=](double x) { return root2 * std::sin(two_pi * kk * x); }});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (std::abs(a.value) != std::abs(b.value)) return std::abs(a.value) > std::abs(b.value);
    return a.value > b.value;
  });

  OperatorSpectrum s;
  for (auto& e : entries) {
    s.eigenvalues.push_back(e.value);
    s.eigenfunctions.push_back(std::move(e.fn));
  }
  s.energy = prof.energy;
  s.complete = prof.degree.has_value();
  return s;
}

/// Discretized spectrum. On the unit interval: eigenvalues of the m x m matrix
/// K(x_a, x_b) / m on the midpoint grid, with Nystrom-extended eigenfunctions for the
/// leading `functions` pairs. On a finite space: the exact spectrum of
/// diag(P)^{1/2} K diag(P)^{1/2}.
inline OperatorSpectrum nystrom_spectrum(const AttributeSpace& space, const KernelSpec& kernel,
                                         const WeighingFunction& w, std::size_t m = 2000,
                                         std::size_t functions = 64) {
  const auto k = effective_kernel(kernel, w);
  OperatorSpectrum s;
  if (const auto* fs = std::get_if<FiniteSet>(&space)) {
    const auto r = static_cast<Eigen::Index>(fs->size());
    Eigen::MatrixXd mat(r, r);
    for (Eigen::Index x = 0; x < r; ++x)
      for (Eigen::Index y = 0; y < r; ++y)
        mat(x, y) = std::sqrt(fs->weights[x] * fs->weights[y]) *
                    k(static_cast<double>(x), static_cast<double>(y));
    const EigenPairs ep = dense_eigenpairs(mat, static_cast<std::size_t>(r), static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < r; ++c) {
      s.eigenvalues.push_back(ep.values[static_cast<std::size_t>(c)]);
      auto fn = std::make_shared<std::vector<double>>(static_cast<std::size_t>(r));
      for (Eigen::Index x = 0; x < r; ++x)
        (*fn)[x] = fs->weights[x] > 0.0 ? ep.vectors(x, c) / std::sqrt(fs->weights[x]) : 0.0;
      s.eigenfunctions.push_back([fn](double x) {
        const auto idx = static_cast<std::size_t>(x);
        return idx < fn->size() ? (*fn)[idx] : 0.0;
      });
      s.energy += ep.values[static_cast<std::size_t>(c)] * ep.values[static_cast<std::size_t>(c)];
    }
    s.complete = true;
    return s;
  }

  if (m < 16) throw std::invalid_argument("quadrature size must be at least 16");
  const auto mm = static_cast<Eigen::Index>(m);
  auto grid = std::make_shared<std::vector<double>>(m);
  for (std::size_t a = 0; a < m; ++a) (*grid)[a] = (static_cast<double>(a) + 0.5) / static_cast<double>(m);
  Eigen::MatrixXd mat(mm, mm);
  for (Eigen::Index a = 0; a < mm; ++a)
    for (Eigen::Index b = a; b < mm; ++b)
      mat(a, b) = mat(b, a) = k((*grid)[a], (*grid)[b]) / static_cast<double>(m);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  if (es.info() != Eigen::Success) throw std::runtime_error("quadrature eigensolver failed");
  const auto order = detail::magnitude_order(es.eigenvalues());
  const double root_m = std::sqrt(static_cast<double>(m));
  for (std::size_t c = 0; c < m; ++c) {
    const double lambda = es.eigenvalues()[order[c]];
    s.eigenvalues.push_back(lambda);
    s.energy += lambda * lambda;
    if (c >= functions) continue;
    auto u = std::make_shared<Eigen::VectorXd>(root_m * es.eigenvectors().col(order[c]));
    detail::canonical_sign(*u);
    const bool extend = std::abs(lambda) > 1e-10 * std::abs(es.eigenvalues()[order[0]]);
    s.eigenfunctions.push_back([u, grid, k, lambda, extend, m](double x) {
      if (!extend) {
        const double t = x - std::floor(x);
        const auto a = std::min<std::size_t>(m - 1, static_cast<std::size_t>(t * static_cast<double>(m)));
        return (*u)[static_cast<Eigen::Index>(a)];
      }
      double acc = 0.0;
      for (std::size_t b = 0; b < m; ++b) acc += k(x, (*grid)[b]) * (*u)[static_cast<Eigen::Index>(b)];
      return acc / (lambda * static_cast<double>(m));
    });
  }
  s.quadrature = true;
  return s;
}

struct TailEstimate {
  double value = 0.0;
  bool truncated = false;  ///< partial sum of a discretized spectrum
};

/// epsilon_r = sum_{k > r} lambda_k^2.
inline TailEstimate tail_epsilon_r(const OperatorSpectrum& s, std::size_t r) {
  TailEstimate t;
  if (s.complete || s.quadrature) {
    for (std::size_t k = r; k < s.eigenvalues.size(); ++k)
      t.value += s.eigenvalues[k] * s.eigenvalues[k];
    t.truncated = s.quadrature;
    return t;
  }
  if (r > s.eigenvalues.size())
    throw std::invalid_argument("tail requested beyond the listed eigenvalues");
  double head = 0.0;
  for (std::size_t k = 0; k < r; ++k) head += s.eigenvalues[k] * s.eigenvalues[k];
  t.value = std::max(0.0, s.energy - head);
  return t;
}

/// f_i = (lambda_k / lambda_1 * phi_k(sigma_i))_{k=1..r}, one row per node.
inline Eigen::MatrixXd ideal_embedding(const OperatorSpectrum& s, const std::vector<double>& attributes,
                                       std::size_t r) {
  if (r > s.eigenfunctions.size() || r > s.eigenvalues.size())
    throw std::invalid_argument("ideal embedding rank exceeds available eigenpairs");
  Eigen::MatrixXd f(static_cast<Eigen::Index>(attributes.size()), static_cast<Eigen::Index>(r));
  for (std::size_t k = 0; k < r; ++k) {
    const double ratio = s.eigenvalues[k] / s.eigenvalues[0];
    for (std::size_t i = 0; i < attributes.size(); ++i)
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = ratio * s.eigenfunctions[k](attributes[i]);
  }
  return f;
}

/// d^2(x, x') = int |K(x, y) - K(x', y)|^2 dy by the m-point midpoint rule on [0, 1].
inline double distance_sq_quadrature(const std::function<double(double, double)>& k, double x,
                                     double xp, std::size_t m = 4000) {
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double y = (static_cast<double>(a) + 0.5) / static_cast<double>(m);
    const double d = k(x, y) - k(xp, y);
    acc += d * d;
  }
  return acc / static_cast<double>(m);
}

/// sum_{k <= terms} lambda_k^2 (phi_k(x) - phi_k(x'))^2; with terms = r this is d_r^2.
inline double distance_sq_spectral(const OperatorSpectrum& s, double x, double xp,
                                   std::optional<std::size_t> terms = {}) {
  const std::size_t top = std::min(terms.value_or(s.eigenfunctions.size()), s.eigenfunctions.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < top; ++k) {
    const double d = s.eigenfunctions[k](x) - s.eigenfunctions[k](xp);
    acc += s.eigenvalues[k] * s.eigenvalues[k] * d * d;
  }
  return acc;
}

/// Diagnostic value of the error bound
///   eta = 2 psi(2 |lambda_1| eps) + sqrt(eps_r) / (|lambda_1|^2 eps^2 int h_{|lambda_1| eps}(d(x, y)) P(dy))
/// for a caller-supplied modulus of continuity psi. The integral uses the m-point midpoint
/// rule on the unit interval or the exact sum on a finite space.
inline double eta_diagnostic(const OperatorSpectrum& s, const AttributeSpace& space,
                             const std::function<double(double, double)>& k, double x, std::size_t r,
                             double eps, const std::function<double(double)>& psi,
                             std::size_t m = 1000) {
  const double l1 = std::abs(s.eigenvalues.at(0));
  const double bandwidth = l1 * eps;
  double mass = 0.0;
  auto dist = [&](double y) {
    if (std::holds_alternative<FiniteSet>(space)) {
      double acc = 0.0;
      const auto& wts = std::get<FiniteSet>(space).weights;
      for (std::size_t z = 0; z < wts.size(); ++z) {
        const double d = k(x, static_cast<double>(z)) - k(y, static_cast<double>(z));
        acc += wts[z] * d * d;
      }
      return std::sqrt(acc);
    }
    return std::sqrt(distance_sq_quadrature(k, x, y, m));
  };
  if (const auto* fs = std::get_if<FiniteSet>(&space)) {
    for (std::size_t y = 0; y < fs->size(); ++y)
      mass += fs->weights[y] * h_epsilon(dist(static_cast<double>(y)), bandwidth);
  } else {
    for (std::size_t a = 0; a < m; ++a)
      mass += h_epsilon(dist((static_cast<double>(a) + 0.5) / static_cast<double>(m)), bandwidth);
    mass /= static_cast<double>(m);
  }
  const double tail = tail_epsilon_r(s, r).value;
  return 2.0 * psi(2.0 * l1 * eps) + std::sqrt(tail) / (l1 * l1 * eps * eps * mass);
}

}  // namespace gsbm
