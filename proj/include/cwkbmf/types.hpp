#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cwkbmf/common.hpp"

namespace cwkbmf {

// Samples in rows, features in columns.  (Expression files on disk are
// transposed: genes in rows, samples in columns.)
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> sample_ids;   // size = values.rows()
  std::vector<std::string> feature_ids;  // size = values.cols()

  void validate() const;
};

// One named gene set from a GMT file.
struct GeneSet {
  std::string name;
  std::string description;
  std::vector<std::string> genes;
};

// One view: a named subset of feature ids.
struct View {
  std::string name;
  std::vector<std::string> feature_ids;
};

// Partition of the feature space into views.  Every feature of the source
// matrix appears in at least one view; overlapping gene sets may share
// features.  Gene sets whose intersection with the available features was
// empty are recorded in dropped_sets.
struct ViewPartition {
  std::vector<View> views;
  std::optional<std::size_t> leftover_view_index;
  std::vector<std::string> dropped_sets;
};

// Similarity matrix for one view.  Training kernels are square with unit
// diagonal; cross kernels are rectangular (training samples x new samples).
struct Kernel {
  Matrix values;
  double width = 0.0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  // training-kernel checks: square, symmetric within 1e-10, diagonal 1,
  // entries in (0, 1], finite
  void validate_training() const;
};

// Ordered collection of same-shape kernels with view names.
struct KernelSet {
  std::vector<Kernel> kernels;
  std::vector<std::string> names;

  std::size_t size() const { return kernels.size(); }
  Index n_samples() const { return kernels.empty() ? 0 : kernels.front().rows(); }
  void validate() const;
};

// Response matrix: rows = samples (cell lines), columns = targets (drugs).
// mask(i, j) is true where the value is observed.
struct ResponseMatrix {
  Matrix values;
  BoolArray mask;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  long observed_count() const { return mask.count(); }
  void validate() const;
};

}  // namespace cwkbmf
