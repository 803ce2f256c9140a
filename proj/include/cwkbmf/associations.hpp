#pragma once

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "cwkbmf/model.hpp"

namespace cwkbmf {

// View-by-component activity: z-score above threshold.  Operates on the
// sample-side weights.
BoolArray activity_matrix(const FittedModel& model, double threshold = 0.67,
                          ZScoreMode mode = ZScoreMode::PriorSd);

struct NamedStrength {
  std::string name;
  double strength = 0.0;
};

struct ComponentAssociations {
  Index component = 0;       // original component index
  double explained = 0.0;    // squared norm of the rank-one term
  std::vector<NamedStrength> views;  // top views by |E[e]|, then name
  std::vector<NamedStrength> drugs;  // top drugs by |E[H_z]|, then name
};

struct AssociationReport {
  std::vector<ComponentAssociations> components;
};

// Top-k view and drug associations per component, components ordered by
// descending explained variance of E[H_x^s] E[H_z^s]^T.  Ties anywhere
// break on name so output order is deterministic.
AssociationReport top_associations(const FittedModel& model, int top_k = 10);

// Reorders components by how consistently their top drugs share an
// annotated target (descending fraction; explained variance breaks ties).
// Drugs absent from the map count as unannotated.
AssociationReport order_by_target_consistency(AssociationReport report,
                                              const std::map<std::string, std::string>& targets);

// {"components": [{"id", "views": [{"name", "strength"}], "drugs": [...]}]}
// with strengths rounded to 6 significant digits.
nlohmann::json eye_diagram_json(const AssociationReport& report);

// flat table: component, side (view|drug), name, strength
std::string associations_tsv(const AssociationReport& report);

}  // namespace cwkbmf
