#include "cwkbmf/associations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cwkbmf/io.hpp"

namespace cwkbmf {

BoolArray activity_matrix(const FittedModel& model, double threshold, ZScoreMode mode) {
  return model.posterior_kernel_weights(mode).zscores_x.array() > threshold;
}

namespace {

double round_6sig(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return std::strtod(buf, nullptr);
}

std::vector<NamedStrength> top_k(const std::vector<NamedStrength>& all, int k) {
  std::vector<NamedStrength> sorted = all;
  std::sort(sorted.begin(), sorted.end(), [](const NamedStrength& a, const NamedStrength& b) {
    if (a.strength != b.strength) return a.strength > b.strength;
    return a.name < b.name;
  });
  if (static_cast<int>(sorted.size()) > k) sorted.resize(static_cast<std::size_t>(k));
  return sorted;
}

}  // namespace

AssociationReport top_associations(const FittedModel& model, int top_k_count) {
  if (top_k_count < 1) throw DimensionError("top_associations: top_k must be >= 1");
  const Index r = model.state.x.r();
  const Index p = model.state.x.p();
  const Index n_drugs = model.state.z.n();
  if (static_cast<Index>(model.kernels_x.names.size()) != p)
    throw DimensionError("top_associations: view name count mismatch");

  std::vector<ComponentAssociations> components;
  for (Index s = 0; s < r; ++s) {
    ComponentAssociations c;
    c.component = s;
    c.explained =
        model.state.x.h_mean.col(s).squaredNorm() * model.state.z.h_mean.col(s).squaredNorm();

    std::vector<NamedStrength> views;
    for (Index m = 0; m < p; ++m)
      views.push_back({model.kernels_x.names[static_cast<std::size_t>(m)],
                       std::abs(model.state.x.e_mean(m, s))});
    c.views = top_k(views, top_k_count);

    std::vector<NamedStrength> drugs;
    for (Index j = 0; j < n_drugs; ++j)
      drugs.push_back(
          {model.col_ids[static_cast<std::size_t>(j)], std::abs(model.state.z.h_mean(j, s))});
    c.drugs = top_k(drugs, top_k_count);
    components.push_back(std::move(c));
  }

  std::sort(components.begin(), components.end(),
            [](const ComponentAssociations& a, const ComponentAssociations& b) {
              if (a.explained != b.explained) return a.explained > b.explained;
              return a.component < b.component;
            });
  return AssociationReport{std::move(components)};
}

AssociationReport order_by_target_consistency(AssociationReport report,
                                              const std::map<std::string, std::string>& targets) {
  auto consistency = [&](const ComponentAssociations& c) {
    std::map<std::string, int> counts;
    for (const auto& d : c.drugs) {
      auto it = targets.find(d.name);
      if (it != targets.end()) ++counts[it->second];
    }
    int best = 0;
    for (const auto& [target, count] : counts) best = std::max(best, count);
    return c.drugs.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(c.drugs.size());
  };
  std::stable_sort(report.components.begin(), report.components.end(),
                   [&](const ComponentAssociations& a, const ComponentAssociations& b) {
                     const double ca = consistency(a), cb = consistency(b);
                     if (ca != cb) return ca > cb;
                     return a.explained > b.explained;
                   });
  return report;
}

nlohmann::json eye_diagram_json(const AssociationReport& report) {
  nlohmann::json root;
  root["components"] = nlohmann::json::array();
  for (const auto& c : report.components) {
    nlohmann::json jc;
    jc["id"] = c.component;
    jc["views"] = nlohmann::json::array();
    for (const auto& v : c.views)
      jc["views"].push_back({{"name", v.name}, {"strength", round_6sig(v.strength)}});
    jc["drugs"] = nlohmann::json::array();
    for (const auto& d : c.drugs)
      jc["drugs"].push_back({{"name", d.name}, {"strength", round_6sig(d.strength)}});
    root["components"].push_back(std::move(jc));
  }
  return root;
}

std::string associations_tsv(const AssociationReport& report) {
  std::ostringstream out;
  out << "component\tside\tname\tstrength\n";
  for (const auto& c : report.components) {
    for (const auto& v : c.views)
      out << c.component << "\tview\t" << v.name << '\t' << format_double(round_6sig(v.strength))
          << '\n';
    for (const auto& d : c.drugs)
      out << c.component << "\tdrug\t" << d.name << '\t' << format_double(round_6sig(d.strength))
          << '\n';
  }
  return out.str();
}

}  // namespace cwkbmf
