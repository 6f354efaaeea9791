#ifndef MFKRIG_GP_HPP
#define MFKRIG_GP_HPP

#include <cmath>
#include <limits>
#include <numbers>

#include "mfkrig/common.hpp"

namespace mfk {

/// Hyperparameters of a constant-mean GP with anisotropic squared-exponential
/// kernel and homoscedastic nugget.
struct GpHyperparameters {
  double mean = 0.0;
  double signal2 = 1.0;
  Vector length;
  double nugget2 = 0.0;

  void validate(int dim) const {
    if (length.size() != dim)
      throw std::invalid_argument("length-scale count does not match input dimension");
    if (!(signal2 > 0.0)) throw std::invalid_argument("signal2 must be positive");
    if (nugget2 < 0.0) throw std::invalid_argument("nugget2 must be nonnegative");
    for (int m = 0; m < length.size(); ++m)
      if (!(length[m] > 0.0)) throw std::invalid_argument("length scales must be positive");
  }
};

/// k(a, b) = signal2 * exp(-1/2 * sum_m ((a_m - b_m) / l_m)^2)
inline double kernel(const Vector& a, const Vector& b, double signal2, const Vector& length) {
  if (a.size() != b.size() || a.size() != length.size())
    throw std::invalid_argument("kernel: dimension mismatch");
  const double z = ((a - b).cwiseQuotient(length)).squaredNorm();
  return signal2 * std::exp(-0.5 * z);
}

inline Matrix kernel_matrix(const Matrix& X, const GpHyperparameters& hp) {
  const int n = static_cast<int>(X.rows());
  Matrix K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = hp.signal2;
    for (int j = i + 1; j < n; ++j) {
      const double z =
          ((X.row(i) - X.row(j)).transpose().cwiseQuotient(hp.length)).squaredNorm();
      K(i, j) = K(j, i) = hp.signal2 * std::exp(-0.5 * z);
    }
  }
  return K;
}

inline Vector cross_kernel(const Matrix& X, const Vector& x, const GpHyperparameters& hp) {
  const int n = static_cast<int>(X.rows());
  Vector k(n);
  for (int i = 0; i < n; ++i) {
    const double z = ((X.row(i).transpose() - x).cwiseQuotient(hp.length)).squaredNorm();
    k[i] = hp.signal2 * std::exp(-0.5 * z);
  }
  return k;
}

namespace detail {

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  double log_det = 0.0;
};

/// Cholesky with escalating diagonal jitter 1e-10 .. 1e-6 (x10 per step).
inline Factorization factorize(const Matrix& Ky) {
  if (!Ky.allFinite()) throw numerical_error("covariance matrix has non-finite entries");
  Factorization f;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    Matrix M = Ky;
    if (jitter > 0.0) M.diagonal().array() += jitter;
    f.llt.compute(M);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      f.log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
      if (std::isfinite(f.log_det)) return f;
    }
    jitter = (attempt == 0) ? 1e-10 : jitter * 10.0;
  }
  throw numerical_error(
      "covariance factorization failed after jitter escalation 1e-10..1e-6");
}

}  // namespace detail

/// Packed optimizer coordinates [mean, log signal2, log l_1..d, log nugget2].
inline Vector pack_hyperparameters(const GpHyperparameters& hp) {
  const int d = static_cast<int>(hp.length.size());
  Vector u(d + 3);
  u[0] = hp.mean;
  u[1] = std::log(hp.signal2);
  for (int m = 0; m < d; ++m) u[2 + m] = std::log(hp.length[m]);
  u[d + 2] = std::log(std::max(hp.nugget2, 1e-300));
  return u;
}

inline GpHyperparameters unpack_hyperparameters(const Vector& u, int dim) {
  if (u.size() != dim + 3) throw std::invalid_argument("packed hyperparameter size mismatch");
  GpHyperparameters hp;
  hp.mean = u[0];
  hp.signal2 = std::exp(u[1]);
  hp.length.resize(dim);
  for (int m = 0; m < dim; ++m) hp.length[m] = std::exp(u[2 + m]);
  hp.nugget2 = std::exp(u[dim + 2]);
  return hp;
}

/// Log-marginal likelihood
///   -1/2 log|K + n2 I| - 1/2 (y - mu)' (K + n2 I)^-1 (y - mu) - N/2 log(2 pi),
/// optionally with its gradient in packed coordinates and the weight vector
/// alpha = (K + n2 I)^-1 (y - mu 1).
inline double log_marginal_likelihood(const Matrix& X, const Vector& y,
                                      const GpHyperparameters& hp, Vector* grad = nullptr,
                                      Vector* alpha_out = nullptr) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (y.size() != n) throw std::invalid_argument("target count does not match inputs");
  if (n < 1) throw std::invalid_argument("need at least one observation");
  hp.validate(d);

  Matrix K = kernel_matrix(X, hp);
  Matrix Ky = K;
  Ky.diagonal().array() += hp.nugget2;
  auto fac = detail::factorize(Ky);

  const Vector r = y.array() - hp.mean;
  const Vector alpha = fac.llt.solve(r);
  const double value = -0.5 * fac.log_det - 0.5 * r.dot(alpha) -
                       0.5 * n * std::log(2.0 * std::numbers::pi);
  if (alpha_out) *alpha_out = alpha;

  if (grad) {
    grad->resize(d + 3);
    Matrix Kyinv = fac.llt.solve(Matrix::Identity(n, n));
    // A = alpha alpha' - Ky^-1; dL/dtheta = 1/2 tr(A dKy/dtheta)
    Matrix A = alpha * alpha.transpose() - Kyinv;
    (*grad)[0] = alpha.sum();
    (*grad)[1] = 0.5 * A.cwiseProduct(K).sum();
    for (int m = 0; m < d; ++m) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double dm = X(i, m) - X(j, m);
          s += A(i, j) * K(i, j) * dm * dm;
        }
      (*grad)[2 + m] = 0.5 * s / (hp.length[m] * hp.length[m]);
    }
    (*grad)[d + 2] = 0.5 * hp.nugget2 * A.trace();
  }
  return value;
}

/// Single-fidelity GP posterior. Construction factorizes once; predictions are
/// O(N) for the mean and O(N^2) for the variance.
class GpModel {
 public:
  GpModel() = default;

  GpModel(Matrix X, Vector y, GpHyperparameters hp)
      : X_(std::move(X)), y_(std::move(y)), hp_(std::move(hp)) {
    const int n = static_cast<int>(X_.rows());
    if (y_.size() != n) throw std::invalid_argument("target count does not match inputs");
    if (n < 1) throw std::invalid_argument("need at least one observation");
    hp_.validate(dim());
    Matrix Ky = kernel_matrix(X_, hp_);
    Ky.diagonal().array() += hp_.nugget2;
    auto fac = detail::factorize(Ky);
    llt_ = std::move(fac.llt);
    jitter_ = fac.jitter;
    log_det_ = fac.log_det;
    alpha_ = llt_.solve(Vector(y_.array() - hp_.mean));
    lml_ = -0.5 * log_det_ - 0.5 * Vector(y_.array() - hp_.mean).dot(alpha_) -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  }

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  Prediction predict(const Vector& x) const {
    require_dim(x);
    const Vector k = cross_kernel(X_, x, hp_);
    Prediction p;
    p.mean = hp_.mean + k.dot(alpha_);
    // one triangular solve; sigma2 - |L^-1 k|^2 loses only sqrt(cond) digits
    const Vector v = llt_.matrixL().solve(k);
    double var = hp_.signal2 - v.squaredNorm();
    if (var < -1e-10)
      throw numerical_error("predictive variance " + format_double(var) +
                            " below round-off tolerance");
    p.variance = std::clamp(var, 0.0, hp_.signal2 + hp_.nugget2);
    return p;
  }

  /// Gradient of the predictive mean:
  ///   d mean / d x_m = sum_n alpha_n k(x, x_n) (x_{n,m} - x_m) / l_m^2
  Vector predict_gradient(const Vector& x) const {
    require_dim(x);
    const Vector k = cross_kernel(X_, x, hp_);
    Vector g = Vector::Zero(dim());
    for (int i = 0; i < X_.rows(); ++i) {
      const double w = alpha_[i] * k[i];
      for (int m = 0; m < dim(); ++m)
        g[m] += w * (X_(i, m) - x[m]) / (hp_.length[m] * hp_.length[m]);
    }
    return g;
  }

  double log_marginal() const { return lml_; }
  const Matrix& inputs() const { return X_; }
  const Vector& targets() const { return y_; }
  const GpHyperparameters& hyperparameters() const { return hp_; }
  int dim() const { return static_cast<int>(X_.cols()); }
  int size() const { return static_cast<int>(X_.rows()); }
  double jitter() const { return jitter_; }

 private:
  void require_dim(const Vector& x) const {
    if (x.size() != dim()) throw std::invalid_argument("query dimension mismatch");
  }

  Matrix X_;
  Vector y_;
  GpHyperparameters hp_;
  Eigen::LLT<Matrix> llt_;
  Vector alpha_;
  double jitter_ = 0.0;
  double log_det_ = 0.0;
  double lml_ = -std::numeric_limits<double>::infinity();
};

}  // namespace mfk

#endif
