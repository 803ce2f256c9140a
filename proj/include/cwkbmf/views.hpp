#pragma once

#include "cwkbmf/types.hpp"

namespace cwkbmf {

// Returns every pathway name that matches at least one target.  A pathway
// matches a target when any of its tokens (maximal alphanumeric runs)
// contains the target as a case-insensitive substring, so target "MEK"
// picks up "MEK_UP.V1_UP" but not "PID_MET_PATHWAY".  Preserves the input
// order of pathway_names.  Both argument lists must be non-empty.
std::vector<std::string> select_target_pathways(const std::vector<std::string>& pathway_names,
                                                const std::vector<std::string>& targets);

// Builds one view per selected gene set (restricted to features present in
// the matrix; sets with empty intersection are dropped and recorded) plus
// one leftover view holding every feature not claimed by any selected set.
// With an empty selection the result is a single view of all features.
ViewPartition build_view_partition(const FeatureMatrix& features,
                                   const std::vector<GeneSet>& gene_sets,
                                   const std::vector<std::string>& selected);

// Extracts the sub-matrix (samples x view features) for one view.
Matrix view_values(const FeatureMatrix& features, const View& view);

}  // namespace cwkbmf
