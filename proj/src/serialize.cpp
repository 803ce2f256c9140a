#include "cwkbmf/serialize.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "cwkbmf/io.hpp"

namespace cwkbmf {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
    throw ParseError("matrix data length does not match its dimensions");
  Matrix m(rows, cols);
  std::size_t pos = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = data[pos++].get<double>();
  return m;
}

json matrices_to_json(const std::vector<Matrix>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(matrix_to_json(m));
  return arr;
}

std::vector<Matrix> matrices_from_json(const json& j) {
  std::vector<Matrix> ms;
  ms.reserve(j.size());
  for (const auto& item : j) ms.push_back(matrix_from_json(item));
  return ms;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& item : j) v(i++) = item.get<double>();
  return v;
}

json side_to_json(const SideState& s) {
  return json{
      {"lambda_shape", matrix_to_json(s.lambda_shape)},
      {"lambda_scale", matrix_to_json(s.lambda_scale)},
      {"a_mean", matrix_to_json(s.a_mean)},
      {"a_cov", matrices_to_json(s.a_cov)},
      {"g_mean", matrices_to_json(s.g_mean)},
      {"g_var", matrix_to_json(s.g_var)},
      {"eta_shape", matrix_to_json(s.eta_shape)},
      {"eta_scale", matrix_to_json(s.eta_scale)},
      {"e_mean", matrix_to_json(s.e_mean)},
      {"e_cov", matrices_to_json(s.e_cov)},
      {"h_mean", matrix_to_json(s.h_mean)},
      {"h_cov", matrices_to_json(s.h_cov)},
  };
}

SideState side_from_json(const json& j) {
  SideState s;
  s.lambda_shape = matrix_from_json(j.at("lambda_shape"));
  s.lambda_scale = matrix_from_json(j.at("lambda_scale"));
  s.a_mean = matrix_from_json(j.at("a_mean"));
  s.a_cov = matrices_from_json(j.at("a_cov"));
  s.g_mean = matrices_from_json(j.at("g_mean"));
  s.g_var = matrix_from_json(j.at("g_var"));
  s.eta_shape = matrix_from_json(j.at("eta_shape"));
  s.eta_scale = matrix_from_json(j.at("eta_scale"));
  s.e_mean = matrix_from_json(j.at("e_mean"));
  s.e_cov = matrices_from_json(j.at("e_cov"));
  s.h_mean = matrix_from_json(j.at("h_mean"));
  s.h_cov = matrices_from_json(j.at("h_cov"));
  return s;
}

json config_to_json(const ModelConfig& c) {
  return json{
      {"components", c.components},
      {"weight_mode", to_string(c.weight_mode)},
      {"max_sweeps", c.max_sweeps},
      {"elbo_rel_tol", c.elbo_rel_tol},
      {"seed", c.seed},
      {"hyper",
       json{{"alpha_lambda", c.hyper.alpha_lambda},
            {"beta_lambda", c.hyper.beta_lambda},
            {"alpha_eta", c.hyper.alpha_eta},
            {"beta_eta", c.hyper.beta_eta},
            {"sigma_g", c.hyper.sigma_g},
            {"sigma_h", c.hyper.sigma_h},
            {"sigma_y", c.hyper.sigma_y}}},
  };
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.components = j.at("components").get<int>();
  c.weight_mode = weight_mode_from_string(j.at("weight_mode").get<std::string>());
  c.max_sweeps = j.at("max_sweeps").get<int>();
  c.elbo_rel_tol = j.at("elbo_rel_tol").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& h = j.at("hyper");
  c.hyper.alpha_lambda = h.at("alpha_lambda").get<double>();
  c.hyper.beta_lambda = h.at("beta_lambda").get<double>();
  c.hyper.alpha_eta = h.at("alpha_eta").get<double>();
  c.hyper.beta_eta = h.at("beta_eta").get<double>();
  c.hyper.sigma_g = h.at("sigma_g").get<double>();
  c.hyper.sigma_h = h.at("sigma_h").get<double>();
  c.hyper.sigma_y = h.at("sigma_y").get<double>();
  return c;
}

json view_to_json(const PipelineView& v) {
  json j{{"name", v.name},
         {"feature_ids", v.feature_ids},
         {"width", v.width},
         {"train_values", matrix_to_json(v.train_values)}};
  if (v.stats) {
    j["stats"] = json{{"mean", vector_to_json(v.stats->mean)},
                      {"std", vector_to_json(v.stats->std)}};
  } else {
    j["stats"] = nullptr;
  }
  return j;
}

PipelineView view_from_json(const json& j) {
  PipelineView v;
  v.name = j.at("name").get<std::string>();
  v.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
  v.width = j.at("width").get<double>();
  v.train_values = matrix_from_json(j.at("train_values"));
  const auto& stats = j.at("stats");
  if (!stats.is_null()) {
    FeatureStats fs;
    fs.mean = vector_from_json(stats.at("mean"));
    fs.std = vector_from_json(stats.at("std"));
    v.stats = std::move(fs);
  }
  return v;
}

}  // namespace

std::string to_string(WeightMode mode) {
  return mode == WeightMode::ComponentWise ? "componentwise" : "shared";
}

WeightMode weight_mode_from_string(const std::string& text) {
  if (text == "componentwise") return WeightMode::ComponentWise;
  if (text == "shared") return WeightMode::SharedAcrossComponents;
  throw ParseError("unknown weight mode '" + text + "' (expected componentwise or shared)");
}

json model_to_json(const SavedModel& saved) {
  const FittedModel& m = saved.model;
  json j;
  j["format_version"] = kFormatVersion;
  j["config"] = config_to_json(m.config);
  j["state"] = json{{"x", side_to_json(m.state.x)},
                    {"z", side_to_json(m.state.z)},
                    {"elbo_trace", m.state.elbo_trace},
                    {"sweep_count", m.state.sweep_count}};
  j["kernel_names_x"] = m.kernels_x.names;
  j["kernel_names_z"] = m.kernels_z.names;
  j["row_ids"] = m.row_ids;
  j["col_ids"] = m.col_ids;
  j["col_mean"] = vector_to_json(m.col_mean);
  j["col_std"] = vector_to_json(m.col_std);
  j["warnings"] = m.warnings;
  json views = json::array();
  for (const auto& v : saved.views) views.push_back(view_to_json(v));
  j["views"] = std::move(views);
  return j;
}

SavedModel model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion)
      throw ParseError("unsupported model format version " + std::to_string(version));
    SavedModel saved;
    FittedModel& m = saved.model;
    m.config = config_from_json(j.at("config"));
    const auto& st = j.at("state");
    m.state.x = side_from_json(st.at("x"));
    m.state.z = side_from_json(st.at("z"));
    m.state.elbo_trace = st.at("elbo_trace").get<std::vector<double>>();
    m.state.sweep_count = st.at("sweep_count").get<int>();
    m.kernels_x.names = j.at("kernel_names_x").get<std::vector<std::string>>();
    m.kernels_z.names = j.at("kernel_names_z").get<std::vector<std::string>>();
    m.row_ids = j.at("row_ids").get<std::vector<std::string>>();
    m.col_ids = j.at("col_ids").get<std::vector<std::string>>();
    m.col_mean = vector_from_json(j.at("col_mean"));
    m.col_std = vector_from_json(j.at("col_std"));
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& item : j.at("views")) saved.views.push_back(view_from_json(item));
    return saved;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model json: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const SavedModel& saved) {
  write_text_file(path, model_to_json(saved).dump(2) + "\n");
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model json: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace cwkbmf
