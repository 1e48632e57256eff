#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsbm/random.hpp"

namespace gsbm {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class EigenMethod {
  automatic,  ///< dense below `dense_threshold` nodes, Lanczos otherwise
  lanczos,
  dense,
};

struct EigenOptions {
  double tol = 1e-8;
  /// Matrix-vector product budget; defaults to 50 r log n.
  std::optional<std::size_t> max_matvecs;
  EigenMethod method = EigenMethod::automatic;
  std::size_t dense_threshold = 512;
  std::uint64_t seed = 0;
};

/// Leading eigenpairs by absolute value. `values` are sorted by |.| descending with ties
/// broken by signed value descending; `vectors` holds unit columns in the same order.
struct EigenPairs {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  double max_residual = 0.0;
  std::size_t matvecs = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, std::size_t matvecs)
      : std::runtime_error("Lanczos did not converge within " + std::to_string(matvecs) +
                           " matrix-vector products (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

namespace detail {

/// Order indices by |value| descending, then signed value descending.
inline std::vector<Eigen::Index> magnitude_order(const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return values[a] > values[b];
  });
  return idx;
}

/// Flip the sign so the entry of largest magnitude is positive.
inline void canonical_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

inline double one_norm(const SparseMatrix& a) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(a.cols());
  for (Eigen::Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) col[it.col()] += std::abs(it.value());
  return a.cols() == 0 ? 0.0 : col.maxCoeff();
}

inline std::size_t default_budget(std::size_t n, std::size_t r) {
  const double logn = std::log(static_cast<double>(std::max<std::size_t>(n, 3)));
  return static_cast<std::size_t>(std::ceil(50.0 * static_cast<double>(std::max<std::size_t>(r, 1)) * logn));
}

inline void check_request(Eigen::Index n, std::size_t values, std::size_t vectors) {
  if (values == 0 || values > static_cast<std::size_t>(n))
    throw std::invalid_argument("requested eigenvalue count must lie in [1, n]");
  if (vectors > values) throw std::invalid_argument("more eigenvectors than eigenvalues requested");
}

}  // namespace detail

/// Full symmetric eigendecomposition; used for small matrices and as an oracle.
inline EigenPairs dense_eigenpairs(const Eigen::MatrixXd& a, std::size_t values,
                                   std::size_t vectors) {
  detail::check_request(a.rows(), values, vectors);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  const auto order = detail::magnitude_order(es.eigenvalues());
  EigenPairs out;
  out.vectors.resize(a.rows(), static_cast<Eigen::Index>(vectors));
  for (std::size_t k = 0; k < values; ++k) out.values.push_back(es.eigenvalues()[order[k]]);
  for (std::size_t k = 0; k < vectors; ++k) {
    out.vectors.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(order[k]);
    detail::canonical_sign(out.vectors.col(static_cast<Eigen::Index>(k)));
    const double res =
        (a * out.vectors.col(static_cast<Eigen::Index>(k)) -
         out.values[k] * out.vectors.col(static_cast<Eigen::Index>(k)))
            .norm();
    out.max_residual = std::max(out.max_residual, res);
  }
  return out;
}

/// Thick-restart Lanczos with full reorthogonalization for the eigenvalues of largest
/// magnitude of a sparse symmetric matrix.
///
/// The Krylov basis is extended one vector at a time and the projected matrix is filled
/// from the Gram-Schmidt coefficients, which keeps it exact after a restart (the arrowhead
/// coupling between kept Ritz vectors and the residual direction appears automatically).
/// A Ritz pair is accepted when |beta * s_last| <= tol * |theta_1|.
inline EigenPairs lanczos_eigenpairs(const SparseMatrix& a, std::size_t values, std::size_t vectors,
                                     const EigenOptions& opts = {}) {
  const Eigen::Index n = a.rows();
  detail::check_request(n, values, vectors);
  const std::size_t budget = opts.max_matvecs.value_or(detail::default_budget(
      static_cast<std::size_t>(n), std::max<std::size_t>(vectors, values > 0 ? values - 1 : 0)));
  const auto want = static_cast<Eigen::Index>(values);
  const Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * want + 16, 32));
  const double anorm = detail::one_norm(a);

  Rng rng = make_rng(opts.seed, Stream::eigensolver);
  std::normal_distribution<double> gauss;
  auto random_unit_orthogonal = [&](const Eigen::MatrixXd& basis, Eigen::Index cols) {
    Eigen::VectorXd v(n);
    for (int attempt = 0; attempt < 8; ++attempt) {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
      for (int pass = 0; pass < 2; ++pass)
        v -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
      const double nv = v.norm();
      if (nv > 1e-10) return Eigen::VectorXd(v / nv);
    }
    throw std::runtime_error("could not extend Krylov basis");
  };

  Eigen::MatrixXd basis(n, m + 1);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(m, m);
  basis.col(0) = random_unit_orthogonal(basis, 0);

  std::size_t matvecs = 0;
  Eigen::Index start = 0;
  Eigen::VectorXd w(n);
  double worst = std::numeric_limits<double>::infinity();

  while (true) {
    Eigen::Index size = m;
    double beta = 0.0;
    bool exhausted = false;
    for (Eigen::Index j = start; j < m; ++j) {
      w.noalias() = a * basis.col(j);
      ++matvecs;
      Eigen::VectorXd h = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * h;
      Eigen::VectorXd h2 = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * h2;
      h += h2;
      proj.col(j).head(j + 1) = h;
      proj.row(j).head(j + 1) = h.transpose();
      beta = w.norm();
      if (beta <= 1e-12 * std::max(anorm, 1e-300)) {
        beta = 0.0;
        if (j + 1 == n) {
          size = j + 1;
          exhausted = true;
          break;
        }
        if (j + 1 < m) basis.col(j + 1) = random_unit_orthogonal(basis, j + 1);
        else basis.col(m) = random_unit_orthogonal(basis, m);
      } else {
        basis.col(j + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(proj.topLeftCorner(size, size));
    const Eigen::VectorXd theta = es.eigenvalues();
    const auto order = detail::magnitude_order(theta);
    const double scale = std::max(std::abs(theta[order[0]]), 1e-300);
    worst = 0.0;
    for (Eigen::Index k = 0; k < want; ++k) {
      const double res = std::abs(beta * es.eigenvectors()(size - 1, order[k]));
      worst = std::max(worst, res);
    }
    const bool converged = exhausted || worst <= opts.tol * scale;

    if (converged || matvecs >= budget || size < m) {
      if (!converged) throw ConvergenceError(worst, matvecs);
      EigenPairs out;
      out.matvecs = matvecs;
      out.max_residual = worst;
      out.vectors.resize(n, static_cast<Eigen::Index>(vectors));
      for (std::size_t k = 0; k < values; ++k) out.values.push_back(theta[order[k]]);
      for (std::size_t k = 0; k < vectors; ++k) {
        auto col = out.vectors.col(static_cast<Eigen::Index>(k));
        col = basis.leftCols(size) * es.eigenvectors().col(order[k]);
        col.normalize();
        detail::canonical_sign(col);
      }
      return out;
    }

    // Thick restart: keep the `keep` Ritz vectors of largest magnitude.
    const Eigen::Index keep = std::min<Eigen::Index>(size - 1, want + (m - want) / 2);
    Eigen::MatrixXd sel(size, keep);
    for (Eigen::Index k = 0; k < keep; ++k) sel.col(k) = es.eigenvectors().col(order[k]);
    Eigen::MatrixXd ritz = basis.leftCols(size) * sel;
    const Eigen::VectorXd residual_dir = basis.col(size);
    basis.leftCols(keep) = ritz;
    basis.col(keep) = residual_dir;
    proj.setZero();
    for (Eigen::Index k = 0; k < keep; ++k) proj(k, k) = theta[order[k]];
    start = keep;
  }
}

/// Dispatches between dense and Lanczos according to `opts.method`.
inline EigenPairs leading_eigenpairs(const SparseMatrix& a, std::size_t values, std::size_t vectors,
                                     const EigenOptions& opts = {}) {
  const bool dense = opts.method == EigenMethod::dense ||
                     (opts.method == EigenMethod::automatic &&
                      static_cast<std::size_t>(a.rows()) <= opts.dense_threshold);
  if (dense) return dense_eigenpairs(Eigen::MatrixXd(a), values, vectors);
  return lanczos_eigenpairs(a, values, vectors, opts);
}

}  // namespace gsbm
