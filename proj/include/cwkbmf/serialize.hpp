#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "cwkbmf/kernels.hpp"
#include "cwkbmf/model.hpp"

namespace cwkbmf {

// Training-side data for one view, retained so new samples can be kernelized
// consistently with the fit (values are post-standardization when stats are
// present).
struct PipelineView {
  std::string name;
  std::vector<std::string> feature_ids;
  double width = 0.0;
  Matrix train_values;
  std::optional<FeatureStats> stats;
};

struct SavedModel {
  FittedModel model;
  std::vector<PipelineView> views;  // empty when fitted directly from kernels
};

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& text);

// Versioned JSON of config, normalization, labels and every variational
// mean/covariance; doubles keep their exact values through a round trip.
// Kernel values and sweep timings are not serialized (names are, so that a
// loaded model still reports associations); a loaded model predicts new rows
// via the retained pipeline views.
nlohmann::json model_to_json(const SavedModel& saved);
SavedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SavedModel& saved);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace cwkbmf
