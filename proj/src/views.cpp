#include "cwkbmf/views.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace cwkbmf {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::vector<std::string> tokenize(std::string_view name) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

std::vector<std::string> select_target_pathways(const std::vector<std::string>& pathway_names,
                                                const std::vector<std::string>& targets) {
  if (pathway_names.empty() || targets.empty())
    throw ParseError("select_target_pathways: pathway and target lists must be non-empty");
  std::vector<std::string> upper_targets;
  for (const auto& t : targets) {
    if (t.empty()) throw ParseError("select_target_pathways: empty target name");
    upper_targets.push_back(upper(t));
  }
  std::vector<std::string> selected;
  for (const auto& name : pathway_names) {
    if (name.empty()) throw ParseError("select_target_pathways: empty pathway name");
    bool hit = false;
    for (const auto& token : tokenize(name)) {
      const std::string ut = upper(token);
      for (const auto& target : upper_targets) {
        if (ut.find(target) != std::string::npos) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) selected.push_back(name);
  }
  return selected;
}

ViewPartition build_view_partition(const FeatureMatrix& features,
                                   const std::vector<GeneSet>& gene_sets,
                                   const std::vector<std::string>& selected) {
  features.validate();
  std::unordered_map<std::string, const GeneSet*> by_name;
  for (const auto& gs : gene_sets) by_name[gs.name] = &gs;

  std::unordered_set<std::string> available(features.feature_ids.begin(),
                                            features.feature_ids.end());
  std::unordered_set<std::string> claimed;
  ViewPartition partition;

  for (const auto& name : selected) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ParseError("build_view_partition: unknown gene set '" + name + "'");
    View view{name, {}};
    // keep the feature-matrix ordering inside each view for determinism
    std::unordered_set<std::string> members(it->second->genes.begin(), it->second->genes.end());
    for (const auto& f : features.feature_ids) {
      if (members.count(f)) {
        view.feature_ids.push_back(f);
        claimed.insert(f);
      }
    }
    if (view.feature_ids.empty()) {
      partition.dropped_sets.push_back(name);
    } else {
      partition.views.push_back(std::move(view));
    }
  }

  View leftover{"other_features", {}};
  for (const auto& f : features.feature_ids)
    if (!claimed.count(f)) leftover.feature_ids.push_back(f);
  if (!leftover.feature_ids.empty()) {
    partition.leftover_view_index = partition.views.size();
    partition.views.push_back(std::move(leftover));
  }

  if (partition.views.empty())
    throw ParseError("build_view_partition: no view has any features");
  return partition;
}

Matrix view_values(const FeatureMatrix& features, const View& view) {
  std::unordered_map<std::string, Index> col_of;
  for (Index j = 0; j < static_cast<Index>(features.feature_ids.size()); ++j)
    col_of[features.feature_ids[j]] = j;
  Matrix out(features.values.rows(), static_cast<Index>(view.feature_ids.size()));
  for (std::size_t k = 0; k < view.feature_ids.size(); ++k) {
    auto it = col_of.find(view.feature_ids[k]);
    if (it == col_of.end())
      throw DimensionError("view_values: feature '" + view.feature_ids[k] +
                           "' not present in matrix");
    out.col(static_cast<Index>(k)) = features.values.col(it->second);
  }
  return out;
}

}  // namespace cwkbmf
