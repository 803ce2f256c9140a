#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>

#include "cwkbmf/model.hpp"
#include "cwkbmf/types.hpp"

namespace cwkbmf {

// Spearman rank correlation with average ranks for ties.  Errors on length
// mismatch, length < 2, or a constant input vector.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Repeated k-fold assignment over n samples.  assignment[rep][i] is the
// fold of sample i in that repeat: a seeded shuffle sliced into folds whose
// sizes differ by at most one (the first n mod k folds get the extra one).
struct CvPlan {
  int folds = 0;
  int repeats = 0;
  std::vector<std::vector<int>> assignment;

  void validate(Index n) const;
};

CvPlan make_cv_plan(Index n, int folds, int repeats, std::uint64_t seed);

// Per-column means of the observed training responses; the prediction for
// every test row.  Takes nothing but responses, so it can never touch a
// kernel.  Columns without observations predict 0.
Vector baseline_predict(const ResponseMatrix& train_y);

struct DrugScore {
  std::string drug;
  double rho = 0.0;
  bool undefined = false;  // some repeat had a constant prediction or truth
};

struct EvaluationReport {
  std::string method;
  std::vector<DrugScore> per_drug;  // mean Spearman over repeats
  double cumulative_rho = 0.0;      // mean of per_drug rho values
  Matrix per_fold_mse;              // repeats x folds, raw response scale
  int folds = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
};

struct CvOptions {
  std::vector<std::string> methods = {"componentwise", "shared", "baseline"};
  bool standardize_features = false;
  int jobs = 1;
};

// Row-wise cross-validation of the drug-response pipeline: per repeat and
// fold, kernels are rebuilt from the training rows of each view, a model
// is fitted on the training responses and held-out rows are predicted via
// cross kernels.  Per-drug Spearman is computed on the predictions pooled
// across the folds of a repeat, then averaged over repeats; constant
// vectors score 0 and set the undefined flag.  Fits are seeded per
// (repeat, fold) so --jobs never changes results.
std::map<std::string, EvaluationReport> cross_validate(const FeatureMatrix& expression,
                                                       const ViewPartition& views,
                                                       const ResponseMatrix& responses,
                                                       const ModelConfig& config,
                                                       const CvPlan& plan,
                                                       const CvOptions& options = {});

std::string report_tsv(const std::map<std::string, EvaluationReport>& reports);
void write_report_json(const std::filesystem::path& path,
                       const std::map<std::string, EvaluationReport>& reports);

}  // namespace cwkbmf
