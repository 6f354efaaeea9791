#ifndef MFKRIG_ACTIVE_SUBSPACE_HPP
#define MFKRIG_ACTIVE_SUBSPACE_HPP

#include <functional>
#include <optional>
#include <vector>

#include "mfkrig/common.hpp"

namespace mfk {

/// Monte Carlo gradient outer-product matrix
///   Sigma = (1/N1) sum_k grad(x_k) grad(x_k)'
/// over uniform samples of the scaled input box [0,1]^dim. The covariance
/// dimension follows the gradient size, which may be a subset of the sampled
/// coordinates.
inline Matrix gradient_covariance(const std::function<Vector(const Vector&)>& gradient,
                                  int dim, int n1, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (n1 < dim) throw std::invalid_argument("need at least dim gradient samples");
  const Matrix pts = uniform_box(n1, dim, seed);
  Matrix sigma;
  for (int k = 0; k < n1; ++k) {
    const Vector g = gradient(pts.row(k).transpose());
    if (k == 0) sigma = Matrix::Zero(g.size(), g.size());
    if (g.size() != sigma.rows()) throw std::invalid_argument("gradient dimension mismatch");
    sigma.noalias() += g * g.transpose();
  }
  return sigma / static_cast<double>(n1);
}

struct ActiveSubspaceResult {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, matching order; largest-|.| component positive

  double captured_fraction(int p) const {
    const int d = static_cast<int>(eigenvalues.size());
    if (p < 0 || p > d) throw std::invalid_argument("subspace dimension out of range");
    const double total = eigenvalues.sum();
    if (total <= 0.0) return 1.0;
    return eigenvalues.head(p).sum() / total;
  }
};

inline ActiveSubspaceResult eigendecompose(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("matrix must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success) throw numerical_error("eigendecomposition failed");

  const int d = static_cast<int>(sigma.rows());
  ActiveSubspaceResult out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (int j = 0; j < d; ++j) {  // solver returns ascending order
    out.eigenvalues[j] = es.eigenvalues()[d - 1 - j];
    out.eigenvectors.col(j) = es.eigenvectors().col(d - 1 - j);
    int arg = 0;
    out.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.eigenvectors(arg, j) < 0.0) out.eigenvectors.col(j) = -out.eigenvectors.col(j);
  }
  if (out.eigenvalues[d - 1] < -1e-10)
    throw numerical_error("gradient covariance has eigenvalue below -1e-10");
  return out;
}

struct ReducedSelection {
  int subspace_dim = 0;       // smallest p with captured fraction >= threshold
  std::vector<int> indices;   // ascending original-coordinate indices
  Vector loadings;            // summed squared loadings over the first p eigenvectors
};

/// Picks the coordinates whose summed squared loadings over the leading
/// subspace exceed the cutoff. An always-kept coordinate (the angle of attack
/// in the wind-load pipeline) can be appended regardless of its loading.
inline ReducedSelection select_reduced_inputs(const ActiveSubspaceResult& result,
                                              double threshold = 0.95, double cutoff = 0.1,
                                              std::optional<int> always_include = {}) {
  if (!(threshold > 0.0) || threshold > 1.0)
    throw std::invalid_argument("threshold must lie in (0, 1]");
  if (cutoff < 0.0) throw std::invalid_argument("cutoff must be nonnegative");
  const int d = static_cast<int>(result.eigenvalues.size());

  ReducedSelection sel;
  while (sel.subspace_dim < d && result.captured_fraction(sel.subspace_dim) < threshold)
    ++sel.subspace_dim;

  sel.loadings = Vector::Zero(d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < sel.subspace_dim; ++j)
      sel.loadings[k] += result.eigenvectors(k, j) * result.eigenvectors(k, j);

  for (int k = 0; k < d; ++k)
    if (sel.loadings[k] > cutoff) sel.indices.push_back(k);
  if (always_include) {
    if (*always_include < 0) throw std::invalid_argument("always_include must be nonnegative");
    if (std::find(sel.indices.begin(), sel.indices.end(), *always_include) ==
        sel.indices.end())
      sel.indices.push_back(*always_include);
    std::sort(sel.indices.begin(), sel.indices.end());
  }
  return sel;
}

}  // namespace mfk

#endif
