// Command-line front end: fit / cv / predict / synth / assoc.
//
// Every subcommand reads an optional JSON config file (--config) whose keys
// mirror the long flag names with dashes turned into underscores; values
// given on the command line win.  The fully resolved configuration is echoed
// to <out>/config.json, and rerunning with that echo reproduces the run
// byte for byte.  Exit codes: 0 ok, 2 input/parse problem, 3 numerical
// failure, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cwkbmf/associations.hpp"
#include "cwkbmf/evaluation.hpp"
#include "cwkbmf/io.hpp"
#include "cwkbmf/kernels.hpp"
#include "cwkbmf/model.hpp"
#include "cwkbmf/rng.hpp"
#include "cwkbmf/serialize.hpp"
#include "cwkbmf/synthetic.hpp"
#include "cwkbmf/views.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using cwkbmf::Index;
using cwkbmf::Matrix;

namespace {

// "-k,--top-k" -> "top_k"
std::string config_key(const std::string& flags) {
  std::string last;
  std::string token;
  std::stringstream ss(flags);
  while (std::getline(ss, token, ',')) {
    if (token.rfind("--", 0) == 0) last = token.substr(2);
  }
  if (last.empty() && !flags.empty() && flags[0] == '-') last = flags.substr(1);
  for (auto& c : last)
    if (c == '-') c = '_';
  return last;
}

// Ties CLI options to config-file keys so file values fill in anything not
// given on the command line, and the resolved set can be echoed back out.
class Bindings {
 public:
  template <typename T>
  CLI::Option* bind(CLI::App& cmd, const std::string& flags, T& value, const std::string& desc) {
    auto* opt = cmd.add_option(flags, value, desc);
    add(config_key(flags), opt, value);
    return opt;
  }

  CLI::Option* bind_flag(CLI::App& cmd, const std::string& flags, bool& value,
                         const std::string& desc) {
    auto* opt = cmd.add_flag(flags, value, desc);
    add(config_key(flags), opt, value);
    return opt;
  }

  void merge(const json& cfg) {
    for (auto& b : bindings_) {
      if (!cfg.contains(b.key)) continue;
      if (b.opt->count() == 0) b.load(cfg.at(b.key));
    }
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      bool known = false;
      for (const auto& b : bindings_)
        if (b.key == it.key()) known = true;
      if (!known) throw cwkbmf::ParseError("unknown config key '" + it.key() + "'");
    }
  }

  json resolved() const {
    json j = json::object();
    for (const auto& b : bindings_) j[b.key] = b.dump();
    return j;
  }

 private:
  struct Binding {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> load;
    std::function<json()> dump;
  };

  template <typename T>
  void add(std::string key, CLI::Option* opt, T& value) {
    bindings_.push_back(Binding{
        std::move(key), opt, [&value](const json& j) { value = j.get<T>(); },
        [&value]() { return json(value); }});
  }

  std::vector<Binding> bindings_;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw cwkbmf::ParseError("cannot open '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw cwkbmf::ParseError("malformed config json '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw cwkbmf::ParseError("config file must hold a json object");
  return cfg;
}

struct CommonFlags {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
};

void bind_common(CLI::App& cmd, Bindings& b, CommonFlags& c) {
  cmd.add_option("--config", c.config_path, "json config file; explicit flags override it");
  b.bind(cmd, "--out", c.out, "output directory")->capture_default_str();
  b.bind(cmd, "--seed", c.seed, "master seed; all randomness derives from it")
      ->capture_default_str();
  b.bind(cmd, "--jobs", c.jobs, "max concurrent fits")->capture_default_str();
}

struct ModelFlags {
  int components = 3;
  std::string weight_mode = "componentwise";
  int max_sweeps = 200;
  double tol = 1e-6;
  double sigma_g = 0.1;
  double sigma_h = 0.1;
  double sigma_y = 1.0;
  double alpha_lambda = 1.0;
  double beta_lambda = 1.0;
  double alpha_eta = 1.0;
  double beta_eta = 1.0;

  cwkbmf::ModelConfig to_config(std::uint64_t seed) const {
    cwkbmf::ModelConfig cfg;
    cfg.components = components;
    cfg.weight_mode = cwkbmf::weight_mode_from_string(weight_mode);
    cfg.max_sweeps = max_sweeps;
    cfg.elbo_rel_tol = tol;
    cfg.seed = seed;
    cfg.hyper.sigma_g = sigma_g;
    cfg.hyper.sigma_h = sigma_h;
    cfg.hyper.sigma_y = sigma_y;
    cfg.hyper.alpha_lambda = alpha_lambda;
    cfg.hyper.beta_lambda = beta_lambda;
    cfg.hyper.alpha_eta = alpha_eta;
    cfg.hyper.beta_eta = beta_eta;
    cfg.validate();
    return cfg;
  }
};

void bind_model(CLI::App& cmd, Bindings& b, ModelFlags& m) {
  b.bind(cmd, "--components", m.components, "number of latent components")
      ->capture_default_str();
  b.bind(cmd, "--weight-mode", m.weight_mode, "componentwise | shared")
      ->capture_default_str();
  b.bind(cmd, "--max-sweeps", m.max_sweeps, "sweep budget")->capture_default_str();
  b.bind(cmd, "--tol", m.tol, "relative elbo improvement stop threshold")
      ->capture_default_str();
  b.bind(cmd, "--sigma-g", m.sigma_g, "kernel projection noise sd")->capture_default_str();
  b.bind(cmd, "--sigma-h", m.sigma_h, "component mixing noise sd")->capture_default_str();
  b.bind(cmd, "--sigma-y", m.sigma_y, "response noise sd")->capture_default_str();
  b.bind(cmd, "--alpha-lambda", m.alpha_lambda, "projection precision gamma shape")
      ->capture_default_str();
  b.bind(cmd, "--beta-lambda", m.beta_lambda, "projection precision gamma scale")
      ->capture_default_str();
  b.bind(cmd, "--alpha-eta", m.alpha_eta, "kernel weight precision gamma shape")
      ->capture_default_str();
  b.bind(cmd, "--beta-eta", m.beta_eta, "kernel weight precision gamma scale")
      ->capture_default_str();
}

struct PipelineFlags {
  std::string expression;
  std::string response;
  std::string gmt;
  std::string pathways;
  std::string targets;
  bool standardize_features = false;
  bool trace_normalize = false;
};

void bind_pipeline(CLI::App& cmd, Bindings& b, PipelineFlags& p) {
  b.bind(cmd, "--expression", p.expression, "expression csv (genes x samples)");
  b.bind(cmd, "--response", p.response, "response csv (samples x drugs, blanks missing)");
  b.bind(cmd, "--gmt", p.gmt, "gene set gmt file defining the views");
  b.bind(cmd, "--pathways", p.pathways, "file listing gene set names to use verbatim");
  b.bind(cmd, "--targets", p.targets, "file of target tokens used to select gene sets");
  b.bind_flag(cmd, "--standardize-features", p.standardize_features,
              "standardize each feature on the training rows before kernels");
  b.bind_flag(cmd, "--trace-normalize", p.trace_normalize,
              "divide each kernel by its mean diagonal");
}

struct PipelineData {
  cwkbmf::FeatureMatrix features;
  cwkbmf::ResponseMatrix responses;
  cwkbmf::ViewPartition partition;
};

PipelineData load_pipeline(const PipelineFlags& f) {
  if (f.expression.empty()) throw cwkbmf::ParseError("missing required --expression");
  if (f.response.empty()) throw cwkbmf::ParseError("missing required --response");
  PipelineData d;
  d.features = cwkbmf::read_expression_csv(f.expression);
  d.features.validate();
  d.responses = cwkbmf::read_response_csv(f.response);
  d.responses.validate();
  if (d.features.sample_ids != d.responses.row_ids)
    throw cwkbmf::ParseError("expression sample ids and response row ids disagree");

  std::vector<cwkbmf::GeneSet> sets;
  std::vector<std::string> selected;
  if (!f.gmt.empty()) {
    sets = cwkbmf::read_gmt(f.gmt);
    if (!f.pathways.empty() && !f.targets.empty())
      throw cwkbmf::ParseError("--pathways and --targets are mutually exclusive");
    if (!f.pathways.empty()) {
      selected = cwkbmf::read_name_list(f.pathways);
    } else if (!f.targets.empty()) {
      std::vector<std::string> names;
      names.reserve(sets.size());
      for (const auto& s : sets) names.push_back(s.name);
      selected = cwkbmf::select_target_pathways(names, cwkbmf::read_name_list(f.targets));
    } else {
      for (const auto& s : sets) selected.push_back(s.name);  // whole file
    }
  } else if (!f.pathways.empty() || !f.targets.empty()) {
    throw cwkbmf::ParseError("--pathways/--targets need --gmt");
  }
  d.partition = cwkbmf::build_view_partition(d.features, sets, selected);
  for (const auto& name : d.partition.dropped_sets)
    std::cerr << "note: gene set '" << name << "' shares no features with the data; dropped\n";
  return d;
}

struct BuiltKernels {
  cwkbmf::KernelSet kx;
  std::vector<cwkbmf::PipelineView> views;
};

BuiltKernels build_kernels(const cwkbmf::FeatureMatrix& fm, const cwkbmf::ViewPartition& part,
                           bool standardize, bool trace_norm) {
  BuiltKernels out;
  for (const auto& view : part.views) {
    Matrix vals = cwkbmf::view_values(fm, view);
    std::optional<cwkbmf::FeatureStats> stats;
    if (standardize) stats = cwkbmf::standardize_features(vals);
    cwkbmf::Kernel k = cwkbmf::gaussian_kernel(vals);
    if (trace_norm) k = cwkbmf::trace_normalize(k);
    out.kx.kernels.push_back(k);
    out.kx.names.push_back(view.name);
    out.views.push_back(
        cwkbmf::PipelineView{view.name, view.feature_ids, k.width, std::move(vals), stats});
  }
  return out;
}

cwkbmf::KernelSet identity_kernel_set(Index n) {
  cwkbmf::KernelSet kz;
  cwkbmf::Kernel k;
  k.values = Matrix::Identity(n, n);
  k.width = 1.0;
  kz.kernels.push_back(std::move(k));
  kz.names.push_back("identity");
  return kz;
}

std::string elbo_trace_csv(const std::vector<double>& trace) {
  std::string s = "sweep,elbo\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    s += std::to_string(i) + "," + cwkbmf::format_double(trace[i]) + "\n";
  return s;
}

void echo_config(const CommonFlags& common, const Bindings& b) {
  cwkbmf::write_text_file(fs::path(common.out) / "config.json", b.resolved().dump(2) + "\n");
}

cwkbmf::ZScoreMode zscore_mode_from_string(const std::string& text) {
  if (text == "prior") return cwkbmf::ZScoreMode::PriorSd;
  if (text == "empirical") return cwkbmf::ZScoreMode::Empirical;
  throw cwkbmf::ParseError("unknown zscore mode '" + text + "' (expected prior or empirical)");
}

// ---- fit ----

struct FitArgs {
  CommonFlags common;
  ModelFlags model;
  PipelineFlags pipeline;
};

int run_fit(const FitArgs& a, const Bindings& b) {
  PipelineData in = load_pipeline(a.pipeline);
  BuiltKernels built = build_kernels(in.features, in.partition, a.pipeline.standardize_features,
                                     a.pipeline.trace_normalize);
  cwkbmf::ModelConfig cfg = a.model.to_config(cwkbmf::rng::substream(a.common.seed, "fit"));
  cwkbmf::FittedModel model =
      cwkbmf::fit(cfg, built.kx, identity_kernel_set(in.responses.cols()), in.responses);
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";

  const fs::path out(a.common.out);
  cwkbmf::write_text_file(out / "elbo_trace.csv", elbo_trace_csv(model.state.elbo_trace));
  const double final_elbo = model.state.elbo_trace.back();
  const int sweeps = model.state.sweep_count;
  cwkbmf::save_model(out / "model.json", cwkbmf::SavedModel{std::move(model), std::move(built.views)});
  echo_config(a.common, b);
  std::cout << "fit: " << in.partition.views.size() << " views, " << sweeps << " sweeps, elbo "
            << cwkbmf::format_double(final_elbo) << "\n";
  return 0;
}

// ---- cv ----

struct CvArgs {
  CommonFlags common;
  ModelFlags model;
  PipelineFlags pipeline;
  int folds = 5;
  int repeats = 10;
  std::vector<std::string> methods = {"componentwise", "shared", "baseline"};
};

int run_cv(const CvArgs& a, const Bindings& b) {
  PipelineData in = load_pipeline(a.pipeline);
  const std::uint64_t cv_seed = cwkbmf::rng::substream(a.common.seed, "cv");
  cwkbmf::ModelConfig cfg = a.model.to_config(cv_seed);
  cwkbmf::CvPlan plan =
      cwkbmf::make_cv_plan(in.responses.rows(), a.folds, a.repeats, cv_seed);
  cwkbmf::CvOptions options;
  options.methods = a.methods;
  options.standardize_features = a.pipeline.standardize_features;
  options.jobs = a.common.jobs;
  auto reports = cwkbmf::cross_validate(in.features, in.partition, in.responses, cfg, plan, options);

  const fs::path out(a.common.out);
  cwkbmf::write_text_file(out / "report.tsv", cwkbmf::report_tsv(reports));
  cwkbmf::write_report_json(out / "report.json", reports);
  echo_config(a.common, b);
  for (const auto& [method, report] : reports)
    std::cout << "cv: " << method << " cumulative rho "
              << cwkbmf::format_double(report.cumulative_rho) << "\n";
  return 0;
}

// ---- predict ----

struct PredictArgs {
  CommonFlags common;
  std::string model_path;
  std::string expression;
};

int run_predict(const PredictArgs& a, const Bindings& b) {
  if (a.model_path.empty()) throw cwkbmf::ParseError("missing required --model");
  if (a.expression.empty()) throw cwkbmf::ParseError("missing required --expression");
  cwkbmf::SavedModel saved = cwkbmf::load_model(a.model_path);
  if (saved.views.empty())
    throw cwkbmf::ParseError("model has no retained views; it cannot kernelize new samples");
  cwkbmf::FeatureMatrix fm = cwkbmf::read_expression_csv(a.expression);
  fm.validate();
  std::map<std::string, Index> col_of;
  for (Index j = 0; j < static_cast<Index>(fm.feature_ids.size()); ++j)
    col_of[fm.feature_ids[static_cast<std::size_t>(j)]] = j;

  std::vector<cwkbmf::Kernel> cross;
  cross.reserve(saved.views.size());
  for (const auto& view : saved.views) {
    Matrix vals(fm.values.rows(), static_cast<Index>(view.feature_ids.size()));
    for (std::size_t k = 0; k < view.feature_ids.size(); ++k) {
      auto it = col_of.find(view.feature_ids[k]);
      if (it == col_of.end())
        throw cwkbmf::ParseError("expression file lacks feature '" + view.feature_ids[k] +
                                 "' required by view '" + view.name + "'");
      vals.col(static_cast<Index>(k)) = fm.values.col(it->second);
    }
    if (view.stats) cwkbmf::apply_feature_stats(vals, *view.stats);
    cross.push_back(cwkbmf::cross_kernel(view.train_values, vals, view.width));
  }
  Matrix pred = saved.model.predict_new_rows(cross);
  const fs::path out(a.common.out);
  cwkbmf::write_labeled_csv(out / "predictions.csv", pred, fm.sample_ids, saved.model.col_ids,
                            "sample");
  echo_config(a.common, b);
  std::cout << "predict: " << pred.rows() << " samples x " << pred.cols() << " drugs\n";
  return 0;
}

// ---- synth ----

struct SynthArgs {
  CommonFlags common;
  int datasets = 0;
  int emit = 0;
  Index nx = 100;
  Index nz = 100;
  int r = 3;
  std::vector<Index> px = {10};
  Index view_dim = 20;
  double noise_y = 1.0;
  double noise_h = 0.1;
  double missing = 0.01;
  double threshold = 0.67;
  std::string zscore = "prior";
  int max_sweeps = 200;
  double tol = 1e-6;
};

json truth_json(const cwkbmf::ActivityMask& t) {
  json activity = json::array();
  for (Index m = 0; m < t.p(); ++m) {
    json row = json::array();
    for (Index s = 0; s < t.r(); ++s) row.push_back(bool(t.activity(m, s)));
    activity.push_back(std::move(row));
  }
  return json{{"activity", std::move(activity)},
              {"shared_views", t.shared_views()},
              {"specific_views", t.specific_views()},
              {"empty_views", t.empty_views()}};
}

void emit_dataset(const fs::path& dir, const cwkbmf::SyntheticDataset& data) {
  for (std::size_t m = 0; m < data.kernels_x.size(); ++m) {
    char name[32];
    std::snprintf(name, sizeof(name), "kernel_x_%02zu.csv", m);
    cwkbmf::write_labeled_csv(dir / name, data.kernels_x.kernels[m].values, data.y.row_ids,
                              data.y.row_ids, "sample");
  }
  cwkbmf::write_labeled_csv(dir / "kernel_z.csv", data.kernel_z.kernels[0].values,
                            data.y.col_ids, data.y.col_ids, "drug");
  cwkbmf::write_response_csv(dir / "y_train.csv", data.y);
  cwkbmf::ResponseMatrix full = data.y;
  full.mask.setConstant(true);
  cwkbmf::write_response_csv(dir / "y_full.csv", full);
  cwkbmf::write_labeled_csv(dir / "test_mask.csv", data.test_mask.cast<double>().matrix(),
                            data.y.row_ids, data.y.col_ids, "sample");
  cwkbmf::write_text_file(dir / "truth.json", truth_json(data.truth).dump(2) + "\n");
}

int run_synth(const SynthArgs& a, const Bindings& b) {
  if (a.datasets <= 0 && a.emit <= 0)
    throw cwkbmf::ParseError("nothing to do: give --datasets (benchmark) and/or --emit");
  if (a.px.empty()) throw cwkbmf::ParseError("--px needs at least one value");
  cwkbmf::SyntheticSpec spec;
  spec.n_x = a.nx;
  spec.n_z = a.nz;
  spec.components = a.r;
  spec.p_x = a.px.front();
  spec.view_dim = a.view_dim;
  spec.noise_y = a.noise_y;
  spec.noise_h = a.noise_h;
  spec.missing_fraction = a.missing;

  const fs::path out(a.common.out);
  for (int d = 0; d < a.emit; ++d) {
    cwkbmf::SyntheticSpec one = spec;
    one.seed = cwkbmf::rng::substream(a.common.seed, "synth", static_cast<std::uint64_t>(d));
    one.validate();
    char name[32];
    std::snprintf(name, sizeof(name), "dataset_%03d", d);
    emit_dataset(out / name, cwkbmf::generate(one));
  }
  if (a.emit > 0) std::cout << "synth: emitted " << a.emit << " dataset directories\n";

  if (a.datasets > 0) {
    cwkbmf::ModelConfig cfg;
    cfg.components = a.r;
    cfg.max_sweeps = a.max_sweeps;
    cfg.elbo_rel_tol = a.tol;
    spec.seed = cwkbmf::rng::substream(a.common.seed, "synth");
    spec.validate();
    auto rows = cwkbmf::run_benchmark(spec, a.px, a.datasets, cfg, a.common.jobs, a.threshold,
                                      zscore_mode_from_string(a.zscore));
    cwkbmf::write_text_file(out / "benchmark.tsv", cwkbmf::benchmark_table_tsv(rows));
    for (const auto& row : rows)
      std::cout << "synth: px " << row.p_x << " " << row.method << " mse "
                << cwkbmf::format_double(row.mse_mean) << "\n";
  }
  echo_config(a.common, b);
  return 0;
}

// ---- assoc ----

struct AssocArgs {
  CommonFlags common;
  std::string model_path;
  int top_k = 10;
  double threshold = 0.67;
  std::string zscore = "prior";
  std::string targets_map;
};

std::map<std::string, std::string> read_targets_map(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw cwkbmf::ParseError("cannot open '" + path.string() + "'");
  std::map<std::string, std::string> targets;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw cwkbmf::ParseError("'" + path.string() + "' line " + std::to_string(lineno) +
                               ": expected 'drug<TAB>target'");
    targets[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return targets;
}

int run_assoc(const AssocArgs& a, const Bindings& b) {
  if (a.model_path.empty()) throw cwkbmf::ParseError("missing required --model");
  cwkbmf::SavedModel saved = cwkbmf::load_model(a.model_path);
  const cwkbmf::FittedModel& model = saved.model;

  cwkbmf::AssociationReport report = cwkbmf::top_associations(model, a.top_k);
  if (!a.targets_map.empty())
    report = cwkbmf::order_by_target_consistency(std::move(report), read_targets_map(a.targets_map));
  const cwkbmf::BoolArray active =
      cwkbmf::activity_matrix(model, a.threshold, zscore_mode_from_string(a.zscore));

  const fs::path out(a.common.out);
  cwkbmf::write_text_file(out / "eye.json", cwkbmf::eye_diagram_json(report).dump(2) + "\n");
  cwkbmf::write_text_file(out / "associations.tsv", cwkbmf::associations_tsv(report));
  std::vector<std::string> component_ids;
  for (Index s = 0; s < active.cols(); ++s) component_ids.push_back("component_" + std::to_string(s));
  cwkbmf::write_labeled_csv(out / "activity.csv", active.cast<double>().matrix(),
                            model.kernels_x.names, component_ids, "view");
  echo_config(a.common, b);
  std::cout << "assoc: " << report.components.size() << " components, " << active.count()
            << " active view-component cells\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernelized Bayesian matrix factorization with component-wise kernel weights"};
  app.require_subcommand(1);

  FitArgs fit_args;
  Bindings fit_bind;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model and serialize it");
  bind_common(*fit_cmd, fit_bind, fit_args.common);
  bind_model(*fit_cmd, fit_bind, fit_args.model);
  bind_pipeline(*fit_cmd, fit_bind, fit_args.pipeline);

  CvArgs cv_args;
  Bindings cv_bind;
  auto* cv_cmd = app.add_subcommand("cv", "repeated k-fold cross validation of the pipeline");
  bind_common(*cv_cmd, cv_bind, cv_args.common);
  bind_model(*cv_cmd, cv_bind, cv_args.model);
  bind_pipeline(*cv_cmd, cv_bind, cv_args.pipeline);
  cv_bind.bind(*cv_cmd, "--folds", cv_args.folds, "cross-validation folds")->capture_default_str();
  cv_bind.bind(*cv_cmd, "--repeats", cv_args.repeats, "independent fold shufflings")
      ->capture_default_str();
  cv_bind
      .bind(*cv_cmd, "--methods", cv_args.methods,
            "any of componentwise, shared, baseline")
      ->capture_default_str();

  PredictArgs predict_args;
  Bindings predict_bind;
  auto* predict_cmd = app.add_subcommand("predict", "predict responses for new samples");
  bind_common(*predict_cmd, predict_bind, predict_args.common);
  predict_bind.bind(*predict_cmd, "--model", predict_args.model_path, "serialized model json");
  predict_bind.bind(*predict_cmd, "--expression", predict_args.expression,
                    "expression csv for the new samples");

  SynthArgs synth_args;
  Bindings synth_bind;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate synthetic datasets and run the recovery benchmark");
  bind_common(*synth_cmd, synth_bind, synth_args.common);
  synth_bind.bind(*synth_cmd, "--datasets", synth_args.datasets, "benchmark datasets per px value")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--emit", synth_args.emit, "dataset directories to write")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--nx", synth_args.nx, "samples")->capture_default_str();
  synth_bind.bind(*synth_cmd, "--nz", synth_args.nz, "drugs")->capture_default_str();
  synth_bind.bind(*synth_cmd, "--r", synth_args.r, "latent components")->capture_default_str();
  synth_bind.bind(*synth_cmd, "--px", synth_args.px, "x-side view counts (benchmark sweeps all)")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--view-dim", synth_args.view_dim, "latent feature dimension")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--noise-y", synth_args.noise_y, "response noise sd")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--noise-h", synth_args.noise_h, "component noise sd")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--missing", synth_args.missing, "held-out test fraction")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--threshold", synth_args.threshold, "activity z-score threshold")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--zscore", synth_args.zscore, "prior | empirical")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--max-sweeps", synth_args.max_sweeps, "sweep budget per fit")
      ->capture_default_str();
  synth_bind.bind(*synth_cmd, "--tol", synth_args.tol, "relative elbo stop threshold")
      ->capture_default_str();

  AssocArgs assoc_args;
  Bindings assoc_bind;
  auto* assoc_cmd =
      app.add_subcommand("assoc", "export view-drug associations of a fitted model");
  bind_common(*assoc_cmd, assoc_bind, assoc_args.common);
  assoc_bind.bind(*assoc_cmd, "--model", assoc_args.model_path, "serialized model json");
  assoc_bind.bind(*assoc_cmd, "--top-k", assoc_args.top_k, "views/drugs listed per component")
      ->capture_default_str();
  assoc_bind.bind(*assoc_cmd, "--threshold", assoc_args.threshold, "activity z-score threshold")
      ->capture_default_str();
  assoc_bind.bind(*assoc_cmd, "--zscore", assoc_args.zscore, "prior | empirical")
      ->capture_default_str();
  assoc_bind.bind(*assoc_cmd, "--targets-map", assoc_args.targets_map,
                  "tsv drug->target used to reorder components");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit_cmd)) {
      fit_bind.merge(load_config_file(fit_args.common.config_path));
      return run_fit(fit_args, fit_bind);
    }
    if (app.got_subcommand(cv_cmd)) {
      cv_bind.merge(load_config_file(cv_args.common.config_path));
      return run_cv(cv_args, cv_bind);
    }
    if (app.got_subcommand(predict_cmd)) {
      predict_bind.merge(load_config_file(predict_args.common.config_path));
      return run_predict(predict_args, predict_bind);
    }
    if (app.got_subcommand(synth_cmd)) {
      synth_bind.merge(load_config_file(synth_args.common.config_path));
      return run_synth(synth_args, synth_bind);
    }
    if (app.got_subcommand(assoc_cmd)) {
      assoc_bind.merge(load_config_file(assoc_args.common.config_path));
      return run_assoc(assoc_args, assoc_bind);
    }
  } catch (const cwkbmf::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cwkbmf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
