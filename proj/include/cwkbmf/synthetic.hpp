#pragma once

#include <cstdint>

#include "cwkbmf/model.hpp"
#include "cwkbmf/types.hpp"

namespace cwkbmf {

struct SyntheticSpec {
  Index n_x = 100;
  Index n_z = 100;
  int components = 3;  // R
  Index p_x = 10;
  Index view_dim = 20;
  double noise_y = 1.0;
  double noise_h = 0.1;
  double missing_fraction = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

// Which kernels feed which components.  activity(m, s) is true when view m
// contributes to component s.  A view is "shared" when its row is all
// true, "specific" when exactly one entry is true, "empty" when none are.
struct ActivityMask {
  BoolArray activity;  // P x R

  Index p() const { return activity.rows(); }
  Index r() const { return activity.cols(); }
  bool is_shared(Index m) const;
  bool is_empty(Index m) const;
  std::vector<Index> shared_views() const;
  std::vector<Index> specific_views() const;
  std::vector<Index> empty_views() const;
};

// View 0 is shared across all components; the remaining p-1 views are
// dealt round-robin over the r+1 categories (specific to component 0..r-1,
// then empty), so (10, 3) yields specific/empty set sizes {3, 2, 2, 2}.
// Requires p >= r + 2 so every category is populated.
ActivityMask canonical_activity(Index p, int r);

struct SyntheticDataset {
  KernelSet kernels_x;
  KernelSet kernel_z;  // single view
  ResponseMatrix y;    // full values; mask marks the training entries
  BoolArray test_mask;
  ActivityMask truth;
  Matrix true_h_x, true_h_z;
  // latent per-view features, retained so cross-validation harnesses can
  // rebuild kernels on row subsets
  std::vector<Matrix> features_x;
  Matrix features_z;
};

// Draws unit-variance component scores for both sides, then builds each
// view's features so that activity is carried by the data itself: an
// active (view, component) pair gets view_dim/(2R) feature columns holding
// noisy copies (sd noise_h) of that component's scores, every other column
// is pure noise, and every column has unit variance by construction, so
// active and empty views share the same N(0, 1) marginals and differ only
// in geometry.
// Gaussian kernels follow the width-equals-dimension rule; the single
// drug-side view carries all z components the same way; finally
// Y = H_x H_z^T + noise_y * noise.  The test mask is drawn from its own
// sub-stream: changing missing_fraction never changes the values.
SyntheticDataset generate(const SyntheticSpec& spec);

struct RecoveryScores {
  double shared = 0.0;
  double specific = 0.0;
  double empty = 0.0;
};

// Per-category agreement between truth and an inferred activity pattern,
// maximized over component permutations (exhaustive for r <= 8; pass
// allow_greedy = true beyond that for a greedy column matching).
RecoveryScores recovery_accuracy(const ActivityMask& truth, const BoolArray& inferred,
                                 bool allow_greedy = false);

struct BenchmarkRow {
  Index p_x = 0;
  std::string method;
  double mse_mean = 0.0;
  double mse_se = 0.0;
  double acc_shared = 0.0;
  double acc_specific = 0.0;
  double acc_empty = 0.0;
};

// Generates n_datasets instances per p_x value, fits both weight modes,
// and reports held-out MSE plus activity-recovery accuracy (mean and
// standard error of the mean over datasets).
std::vector<BenchmarkRow> run_benchmark(const SyntheticSpec& base,
                                        const std::vector<Index>& p_x_values, int n_datasets,
                                        const ModelConfig& config, int jobs,
                                        double activity_threshold = 0.67,
                                        ZScoreMode zscore_mode = ZScoreMode::PriorSd);

std::string benchmark_table_tsv(const std::vector<BenchmarkRow>& rows);

// Held-out mean squared error of a fitted model on the dataset's test mask
// (raw response scale).
double test_mse(const FittedModel& model, const SyntheticDataset& data);

}  // namespace cwkbmf
