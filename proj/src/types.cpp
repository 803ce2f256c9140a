#include "cwkbmf/types.hpp"

#include <unordered_set>

namespace cwkbmf {

namespace {

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw DimensionError(std::string(what) + ": empty id");
    if (!seen.insert(id).second)
      throw DimensionError(std::string(what) + ": duplicate id '" + id + "'");
  }
}

}  // namespace

void FeatureMatrix::validate() const {
  if (static_cast<Index>(sample_ids.size()) != values.rows())
    throw DimensionError("FeatureMatrix: sample id count does not match row count");
  if (static_cast<Index>(feature_ids.size()) != values.cols())
    throw DimensionError("FeatureMatrix: feature id count does not match column count");
  if (!values.allFinite()) throw DimensionError("FeatureMatrix: non-finite values");
  check_unique(sample_ids, "FeatureMatrix sample ids");
  check_unique(feature_ids, "FeatureMatrix feature ids");
}

void Kernel::validate_training() const {
  if (values.rows() != values.cols())
    throw DimensionError("Kernel: training kernel must be square");
  if (!values.allFinite()) throw DimensionError("Kernel: non-finite entries");
  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw DimensionError("Kernel: asymmetry exceeds 1e-10");
  for (Index i = 0; i < values.rows(); ++i)
    if (values(i, i) != 1.0) throw DimensionError("Kernel: diagonal entry differs from 1");
  if (values.minCoeff() <= 0.0 || values.maxCoeff() > 1.0)
    throw DimensionError("Kernel: entries must lie in (0, 1]");
}

void KernelSet::validate() const {
  if (kernels.empty()) throw DimensionError("KernelSet: at least one kernel is required");
  if (names.size() != kernels.size())
    throw DimensionError("KernelSet: name count does not match kernel count");
  const Index n = kernels.front().rows();
  for (const auto& k : kernels) {
    if (k.rows() != n || k.cols() != n)
      throw DimensionError("KernelSet: kernels disagree on sample count");
    if (!k.values.allFinite()) throw DimensionError("KernelSet: non-finite entries");
    const double asym = (k.values - k.values.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw DimensionError("KernelSet: asymmetric kernel");
  }
}

void ResponseMatrix::validate() const {
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw DimensionError("ResponseMatrix: mask shape does not match values");
  if (static_cast<Index>(row_ids.size()) != values.rows())
    throw DimensionError("ResponseMatrix: row id count mismatch");
  if (static_cast<Index>(col_ids.size()) != values.cols())
    throw DimensionError("ResponseMatrix: column id count mismatch");
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      if (mask(i, j) && !std::isfinite(values(i, j)))
        throw DimensionError("ResponseMatrix: observed entry is non-finite");
  if (observed_count() == 0) throw DimensionError("ResponseMatrix: no observed entries");
}

}  // namespace cwkbmf
