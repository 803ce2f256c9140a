#include "cwkbmf/kernels.hpp"

#include <cmath>

namespace cwkbmf {

namespace {

// pairwise squared distances between rows of a and rows of b via the Gram
// expansion ||a||^2 + ||b||^2 - 2 a.b, clamped at zero
Matrix squared_distances(const Matrix& a, const Matrix& b) {
  const Vector na = a.rowwise().squaredNorm();
  const Vector nb = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * a * b.transpose());
  d2.colwise() += na;
  d2.rowwise() += nb.transpose();
  return d2.cwiseMax(0.0);
}

void check_width(double width) {
  if (!(width > 0.0) || !std::isfinite(width))
    throw DimensionError("kernel width must be positive and finite");
}

Matrix exponentiate(Matrix d2, double width) {
  const double scale = -1.0 / (2.0 * width * width);
  // keep entries strictly positive even for extreme separations
  return (d2 * scale).cwiseMax(-700.0).array().exp().matrix();
}

}  // namespace

Kernel gaussian_kernel(const Matrix& view_values, std::optional<double> width) {
  if (view_values.rows() < 1 || view_values.cols() < 1)
    throw DimensionError("gaussian_kernel: view must have at least one sample and one feature");
  if (!view_values.allFinite())
    throw DimensionError("gaussian_kernel: view contains non-finite values");
  const double w = width.value_or(static_cast<double>(view_values.cols()));
  check_width(w);

  Matrix d2 = squared_distances(view_values, view_values);
  d2.diagonal().setZero();
  Kernel k{exponentiate(std::move(d2), w), w};
  k.values = 0.5 * (k.values + k.values.transpose()).eval();
  k.values.diagonal().setOnes();
  return k;
}

Kernel cross_kernel(const Matrix& train_values, const Matrix& new_values, double width) {
  if (train_values.rows() < 1)
    throw DimensionError("cross_kernel: no training samples");
  if (train_values.cols() != new_values.cols() && new_values.rows() > 0)
    throw DimensionError("cross_kernel: feature count mismatch between training and new samples");
  if (!train_values.allFinite() || !new_values.allFinite())
    throw DimensionError("cross_kernel: non-finite values");
  check_width(width);
  if (new_values.rows() == 0)
    return Kernel{Matrix(train_values.rows(), 0), width};
  return Kernel{exponentiate(squared_distances(train_values, new_values), width), width};
}

Kernel trace_normalize(const Kernel& k) {
  const double mean_diag = k.values.diagonal().mean();
  if (!(mean_diag > 0.0))
    throw DimensionError("trace_normalize: non-positive mean diagonal");
  return Kernel{k.values / mean_diag, k.width};
}

FeatureStats standardize_features(Matrix& values) {
  const Index n = values.rows();
  FeatureStats stats;
  stats.mean = values.colwise().mean();
  values.rowwise() -= stats.mean.transpose();
  stats.std = (values.colwise().squaredNorm() / static_cast<double>(n))
                  .cwiseSqrt()
                  .transpose();
  for (Index j = 0; j < stats.std.size(); ++j)
    if (stats.std[j] < 1e-12) stats.std[j] = 1.0;
  values.array().rowwise() /= stats.std.transpose().array();
  return stats;
}

void apply_feature_stats(Matrix& values, const FeatureStats& stats) {
  if (values.cols() != stats.mean.size())
    throw DimensionError("apply_feature_stats: feature count mismatch");
  values.rowwise() -= stats.mean.transpose();
  values.array().rowwise() /= stats.std.transpose().array();
}

}  // namespace cwkbmf
