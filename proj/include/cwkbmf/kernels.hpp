#pragma once

#include <optional>

#include "cwkbmf/types.hpp"

namespace cwkbmf {

// Gaussian similarity kernel over the rows of view_values:
//   K(i, j) = exp(-||x_i - x_j||^2 / (2 width^2))
// The default width equals the number of columns of the view.  Squared
// distances are formed from the Gram matrix with negative round-off
// clamped to zero, so the result is exactly symmetric with unit diagonal.
Kernel gaussian_kernel(const Matrix& view_values, std::optional<double> width = std::nullopt);

// Rectangular kernel between training rows and new rows, evaluated with a
// training kernel's width.  new_values may have zero rows.
Kernel cross_kernel(const Matrix& train_values, const Matrix& new_values, double width);

// Optional normalization K / mean(diag K); off by default everywhere.
Kernel trace_normalize(const Kernel& k);

// Per-feature (column) standardization to zero mean, unit variance.
// Features with vanishing variance get standard deviation 1.  Returns the
// training statistics so new samples can be transformed consistently.
struct FeatureStats {
  Vector mean;
  Vector std;
};
FeatureStats standardize_features(Matrix& values);
void apply_feature_stats(Matrix& values, const FeatureStats& stats);

}  // namespace cwkbmf
