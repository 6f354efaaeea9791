#ifndef MFKRIG_PIPELINE_HPP
#define MFKRIG_PIPELINE_HPP

#include <array>
#include <string>
#include <vector>

#include "mfkrig/active_subspace.hpp"
#include "mfkrig/io.hpp"
#include "mfkrig/sobol.hpp"

namespace mfk {

inline const std::vector<std::string>& coefficient_names() {
  static const std::vector<std::string> names = {"c_x", "c_y", "c_m"};
  return names;
}

/// Writes a scaled reduced point into a full scaled base vector.
inline Vector embed_reduced(const Vector& z, const std::vector<int>& reduced_indices,
                            const Vector& base_scaled) {
  if (z.size() != static_cast<Eigen::Index>(reduced_indices.size()))
    throw std::invalid_argument("reduced point size does not match index set");
  Vector full = base_scaled;
  for (std::size_t i = 0; i < reduced_indices.size(); ++i) {
    const int k = reduced_indices[i];
    if (k < 0 || k >= full.size()) throw std::invalid_argument("reduced index out of range");
    full[k] = z[static_cast<Eigen::Index>(i)];
  }
  return full;
}

/// Correlation evaluations (c_x, c_y, c_m) on scaled reduced points, inert
/// coordinates held at a frozen scaled base point.
inline LevelEvaluator isherwood_source(const CoefficientTable& table,
                                       std::vector<int> reduced_indices, Vector base_scaled) {
  const InputScaler scaler = scaler_from_table(table);
  if (base_scaled.size() != kInputDim)
    throw std::invalid_argument("base point must have 8 components");
  return [table, scaler, reduced_indices = std::move(reduced_indices),
          base_scaled = std::move(base_scaled)](const Vector& z) {
    const Vector x = scaler.unscale(embed_reduced(z, reduced_indices, base_scaled));
    const LoadCoefficients c = isherwood_from_input(x, table);
    Vector out(3);
    out << c.c_x, c.c_y, c.c_m;
    return out;
  };
}

/// Replays precomputed evaluations; requests off the stored designs fail.
inline LevelEvaluator replay_source(Dataset data, double tol = 1e-9) {
  return [data = std::move(data), tol](const Vector& z) {
    for (int r = 0; r < data.X.rows(); ++r)
      if ((data.X.row(r).transpose() - z).cwiseAbs().maxCoeff() <= tol)
        return Vector(data.Y.row(r).transpose());
    throw data_error("replay source has no evaluation for the requested point");
  };
}

struct CoefficientReduceReport {
  std::string name;
  Vector eigenvalues;
  Matrix eigenvectors;
  Vector loadings;
  int subspace_dim = 0;
  std::vector<int> selected;  // original-coordinate indices (geometric)
};

struct ReduceResult {
  std::array<CoefficientReduceReport, 3> per_output;
  std::vector<int> selected_indices;  // union + angle, ascending
};

struct ReduceOptions {
  int bootstrap_samples = 200;
  int gradient_samples = 500;
  double capture_threshold = 0.95;
  double loading_cutoff = 0.1;
  std::uint64_t seed = 0;
  FitConfig fit;
};

/// Input-reduction stage: fits one bootstrap GP per coefficient on uniform
/// samples of the full scaled box, accumulates the gradient outer-product
/// over the seven geometric components, and keeps the coordinates whose
/// leading-subspace loadings pass the cutoff. The angle coordinate is
/// structurally retained.
inline ReduceResult run_reduce(const CoefficientTable& table, const ReduceOptions& opt) {
  table.validate();
  const InputScaler scaler = scaler_from_table(table);
  const Matrix Xs = uniform_box(opt.bootstrap_samples, kInputDim, opt.seed);
  Matrix Ys(opt.bootstrap_samples, 3);
  for (int i = 0; i < Xs.rows(); ++i) {
    const LoadCoefficients c =
        isherwood_from_input(scaler.unscale(Xs.row(i).transpose()), table);
    Ys(i, 0) = c.c_x;
    Ys(i, 1) = c.c_y;
    Ys(i, 2) = c.c_m;
  }

  ReduceResult res;
  std::vector<int> all;
  for (int j = 0; j < 3; ++j) {
    FitConfig fc = opt.fit;
    fc.seed = opt.seed + 101 * static_cast<std::uint64_t>(j);
    const GpModel gp = fit_gp(Xs, Ys.col(j), fc);
    const Matrix sigma = gradient_covariance(
        [&gp](const Vector& x) { return Vector(gp.predict_gradient(x).head(kInputDim - 1)); },
        kInputDim, opt.gradient_samples, opt.seed + 77);
    const ActiveSubspaceResult eig = eigendecompose(sigma);
    const ReducedSelection sel =
        select_reduced_inputs(eig, opt.capture_threshold, opt.loading_cutoff);
    auto& rep = res.per_output[static_cast<std::size_t>(j)];
    rep.name = coefficient_names()[static_cast<std::size_t>(j)];
    rep.eigenvalues = eig.eigenvalues;
    rep.eigenvectors = eig.eigenvectors;
    rep.loadings = sel.loadings;
    rep.subspace_dim = sel.subspace_dim;
    rep.selected = sel.indices;
    all.insert(all.end(), sel.indices.begin(), sel.indices.end());
  }
  all.push_back(kIdxPhi);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  res.selected_indices = std::move(all);
  return res;
}

/// Single-level surrogate of the correlation over the reduced box, one GP per
/// coefficient; bootstrap for the reporting stage.
inline ModelBundle bootstrap_surrogate(const CoefficientTable& table,
                                       const std::vector<int>& reduced_indices, int samples,
                                       std::uint64_t seed, const FitConfig& fit) {
  table.validate();
  const InputScaler full = scaler_from_table(table);
  const int p = static_cast<int>(reduced_indices.size());
  const Vector base = Vector::Constant(kInputDim, 0.5);
  const Matrix Zs = uniform_box(samples, p, seed);
  Matrix Ys(samples, 3);
  const auto eval = isherwood_source(table, reduced_indices, base);
  for (int i = 0; i < Zs.rows(); ++i) Ys.row(i) = eval(Zs.row(i).transpose()).transpose();

  ModelBundle bundle;
  bundle.output_names = coefficient_names();
  bundle.reduced_indices = reduced_indices;
  for (int k : reduced_indices) {
    bundle.input_names.push_back(input_names()[static_cast<std::size_t>(k)]);
    bundle.ranges.push_back(full.ranges()[static_cast<std::size_t>(k)]);
  }
  for (int j = 0; j < 3; ++j) {
    FitConfig fc = fit;
    fc.seed = seed + 211 * static_cast<std::uint64_t>(j);
    bundle.models.emplace_back(std::vector<GpModel>{fit_gp(Zs, Ys.col(j), fc)},
                               std::vector<double>{});
  }
  return bundle;
}

struct SobolReport {
  std::vector<std::string> params;
  std::vector<SobolResult> per_output;      // aligned with bundle.output_names
  std::vector<std::string> top_geometric;   // per output, ranked by total index
};

/// Pick-freeze indices of every output's posterior mean over the scaled
/// reduced box; the headline ranking uses the total-effect index over the
/// geometric (non-angle) parameters.
inline SobolReport sobol_report(const ModelBundle& bundle, int samples, std::uint64_t seed) {
  SobolReport rep;
  rep.params = bundle.input_names;
  const int p = static_cast<int>(bundle.input_names.size());
  for (std::size_t j = 0; j < bundle.models.size(); ++j) {
    const auto& model = bundle.models[j];
    const SobolResult r = sobol_indices(
        [&model](const Vector& z) { return model.predict(z).mean; }, p, samples, seed);
    int best = -1;
    for (int k = 0; k < p; ++k) {
      if (bundle.input_names[static_cast<std::size_t>(k)] == "phi") continue;
      if (best < 0 || r.total[k] > r.total[best]) best = k;
    }
    rep.per_output.push_back(r);
    rep.top_geometric.push_back(best >= 0 ? bundle.input_names[static_cast<std::size_t>(best)]
                                          : "");
  }
  return rep;
}

}  // namespace mfk

#endif
