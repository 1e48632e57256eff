#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gsbm {

struct ProcrustesFit {
  Eigen::MatrixXd rotation;  ///< orthogonal k x k matrix O
  double residual = 0.0;     ///< sum_i ||z_i - O f_i||^2
};

/// Orthogonal Procrustes: the O minimizing sum_i ||z_i - O f_i||^2 over orthogonal k x k
/// matrices, with rows of `z` and `f` as the points.
inline ProcrustesFit procrustes(const Eigen::MatrixXd& z, const Eigen::MatrixXd& f) {
  if (z.rows() != f.rows() || z.cols() != f.cols())
    throw std::invalid_argument("procrustes needs point sets of equal shape");
  const Eigen::MatrixXd m = z.transpose() * f;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesFit fit;
  fit.rotation = svd.matrixU() * svd.matrixV().transpose();
  fit.residual = std::max(0.0, z.squaredNorm() + f.squaredNorm() - 2.0 * svd.singularValues().sum());
  return fit;
}

/// Consecutive runs of coordinates whose operator eigenvalues agree to a relative 1e-9.
inline std::vector<std::vector<Eigen::Index>> degenerate_blocks(const std::vector<double>& eigenvalues,
                                                                 Eigen::Index count) {
  std::vector<std::vector<Eigen::Index>> blocks;
  for (Eigen::Index k = 0; k < count; ++k) {
    const double v = eigenvalues.at(static_cast<std::size_t>(k));
    if (!blocks.empty()) {
      const double prev = eigenvalues[static_cast<std::size_t>(blocks.back().back())];
      if (std::abs(v - prev) <= 1e-9 * std::max(std::abs(v), std::abs(prev))) {
        blocks.back().push_back(k);
        continue;
      }
    }
    blocks.push_back({k});
  }
  return blocks;
}

/// Residual between the embedding z and the ideal embedding f, aligned by an orthogonal
/// transform inside each block of equal operator eigenvalues and normalized by sum ||f_i||^2
/// over the compared coordinates. A leading block of size one (the near-constant top
/// eigenvector) is left out.
inline double block_procrustes_residual(const Eigen::MatrixXd& z, const Eigen::MatrixXd& f,
                                        const std::vector<double>& operator_eigenvalues) {
  if (z.rows() != f.rows() || z.cols() != f.cols())
    throw std::invalid_argument("embedding and ideal embedding differ in shape");
  auto blocks = degenerate_blocks(operator_eigenvalues, z.cols());
  if (blocks.size() > 1 && blocks.front().size() == 1) blocks.erase(blocks.begin());
  double residual = 0.0;
  double scale = 0.0;
  for (const auto& block : blocks) {
    Eigen::MatrixXd zb(z.rows(), static_cast<Eigen::Index>(block.size()));
    Eigen::MatrixXd fb(f.rows(), static_cast<Eigen::Index>(block.size()));
    for (std::size_t c = 0; c < block.size(); ++c) {
      zb.col(static_cast<Eigen::Index>(c)) = z.col(block[c]);
      fb.col(static_cast<Eigen::Index>(c)) = f.col(block[c]);
    }
    residual += procrustes(zb, fb).residual;
    scale += fb.squaredNorm();
  }
  if (!(scale > 0.0)) throw std::domain_error("ideal embedding is zero on the compared coordinates");
  return residual / scale;
}

}  // namespace gsbm
