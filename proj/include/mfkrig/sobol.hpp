#ifndef MFKRIG_SOBOL_HPP
#define MFKRIG_SOBOL_HPP

#include <gsl/gsl_qrng.h>

#include <functional>
#include <random>

#include "mfkrig/common.hpp"

namespace mfk {

struct SobolResult {
  Vector first_order;
  Vector total;
  double variance = 0.0;
  int samples = 0;
};

namespace detail {

// A/B sample pair for the pick-freeze scheme. Drawn as the two halves of a
// 2*dim Sobol sequence under a seeded uniform shift mod 1, which keeps the
// estimator unbiased and deterministic per seed while converging much faster
// than plain Monte Carlo. The GSL generator stops at 40 dimensions; past 20
// inputs fall back to independent uniform draws.
inline void pick_freeze_pair(int n, int dim, std::uint64_t seed, Matrix& A, Matrix& B) {
  if (2 * dim > 40) {
    A = uniform_box(n, dim, seed);
    B = uniform_box(n, dim, seed + 0x9e3779b97f4a7c15ULL);
    return;
  }
  gsl_qrng* q = gsl_qrng_alloc(gsl_qrng_sobol, static_cast<unsigned>(2 * dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector shift(2 * dim);
  for (int j = 0; j < 2 * dim; ++j) shift[j] = unit(rng);
  A.resize(n, dim);
  B.resize(n, dim);
  std::vector<double> x(static_cast<std::size_t>(2 * dim));
  for (int i = 0; i < n; ++i) {
    gsl_qrng_get(q, x.data());
    for (int j = 0; j < dim; ++j) {
      const double a = x[static_cast<std::size_t>(j)] + shift[j];
      const double b = x[static_cast<std::size_t>(dim + j)] + shift[dim + j];
      A(i, j) = a - std::floor(a);
      B(i, j) = b - std::floor(b);
    }
  }
  gsl_qrng_free(q);
}

}  // namespace detail

/// Pick-freeze estimation of first-order and total Sobol indices over the
/// scaled input box [0,1]^dim with (dim + 2) * n evaluations (Jansen
/// estimators). Deterministic for a given seed.
inline SobolResult sobol_indices(const std::function<double(const Vector&)>& f, int dim,
                                 int n, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (n < 2) throw std::invalid_argument("need at least 2 samples");

  Matrix A, B;
  detail::pick_freeze_pair(n, dim, seed, A, B);

  Vector fa(n), fb(n);
  for (int i = 0; i < n; ++i) {
    fa[i] = f(A.row(i).transpose());
    fb[i] = f(B.row(i).transpose());
  }

  const double mean = 0.5 * (fa.mean() + fb.mean());
  const double variance =
      0.5 * ((fa.array() - mean).square().mean() + (fb.array() - mean).square().mean());

  SobolResult out;
  out.first_order = Vector::Zero(dim);
  out.total = Vector::Zero(dim);
  out.variance = variance;
  out.samples = n;
  if (variance <= 0.0) return out;  // constant response

  Vector fab(n);
  for (int k = 0; k < dim; ++k) {
    for (int i = 0; i < n; ++i) {
      Vector x = A.row(i).transpose();
      x[k] = B(i, k);
      fab[i] = f(x);
    }
    // S_k   = 1 - E[(f(B) - f(AB_k))^2] / (2 V)
    // S_Tk  =     E[(f(A) - f(AB_k))^2] / (2 V)
    out.first_order[k] = 1.0 - (fb - fab).squaredNorm() / (2.0 * n * variance);
    out.total[k] = (fa - fab).squaredNorm() / (2.0 * n * variance);
  }
  return out;
}

struct ResponseSurface {
  int axis_x = 0;
  int axis_y = 1;
  Vector xs;      // scaled grid along axis_x
  Vector ys;      // scaled grid along axis_y
  Matrix values;  // values(i, j) = f at (xs[i], ys[j]), rest at midpoints
};

/// Dense grid of the response over two scaled coordinates, remaining
/// coordinates held at the box midpoint.
inline ResponseSurface response_surface(const std::function<double(const Vector&)>& f,
                                        int dim, int axis_x, int axis_y, int nx, int ny) {
  if (axis_x < 0 || axis_x >= dim || axis_y < 0 || axis_y >= dim || axis_x == axis_y)
    throw std::invalid_argument("response surface axes invalid");
  if (nx < 2 || ny < 2) throw std::invalid_argument("grid needs at least 2 points per axis");

  ResponseSurface out;
  out.axis_x = axis_x;
  out.axis_y = axis_y;
  out.xs = Vector::LinSpaced(nx, 0.0, 1.0);
  out.ys = Vector::LinSpaced(ny, 0.0, 1.0);
  out.values.resize(nx, ny);
  Vector x = Vector::Constant(dim, 0.5);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      x[axis_x] = out.xs[i];
      x[axis_y] = out.ys[j];
      out.values(i, j) = f(x);
    }
  return out;
}

}  // namespace mfk

#endif
