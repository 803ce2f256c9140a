#include "cwkbmf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cwkbmf/io.hpp"
#include "cwkbmf/kernels.hpp"
#include "cwkbmf/parallel.hpp"
#include "cwkbmf/rng.hpp"
#include "cwkbmf/views.hpp"

namespace cwkbmf {

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

bool is_constant(const std::vector<double>& v) {
  for (double x : v)
    if (x != v.front()) return false;
  return true;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  if (a.size() < 2) throw DimensionError("spearman: need at least two pairs");
  for (double x : a)
    if (!std::isfinite(x)) throw DimensionError("spearman: non-finite value");
  for (double x : b)
    if (!std::isfinite(x)) throw DimensionError("spearman: non-finite value");
  if (is_constant(a) || is_constant(b))
    throw DimensionError("spearman: correlation undefined for a constant vector");

  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double xa = ra[i] - mean;
    const double xb = rb[i] - mean;
    num += xa * xb;
    da += xa * xa;
    db += xb * xb;
  }
  return num / std::sqrt(da * db);
}

void CvPlan::validate(Index n) const {
  if (folds < 2) throw DimensionError("CvPlan: folds must be >= 2");
  if (repeats < 1) throw DimensionError("CvPlan: repeats must be >= 1");
  if (static_cast<int>(assignment.size()) != repeats)
    throw DimensionError("CvPlan: repeat count mismatch");
  for (const auto& rep : assignment) {
    if (static_cast<Index>(rep.size()) != n) throw DimensionError("CvPlan: sample count mismatch");
    std::vector<Index> sizes(static_cast<std::size_t>(folds), 0);
    for (int f : rep) {
      if (f < 0 || f >= folds) throw DimensionError("CvPlan: fold index out of range");
      ++sizes[static_cast<std::size_t>(f)];
    }
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    if (*hi - *lo > 1) throw DimensionError("CvPlan: fold sizes differ by more than one");
    if (*lo == 0) throw DimensionError("CvPlan: empty fold");
  }
}

CvPlan make_cv_plan(Index n, int folds, int repeats, std::uint64_t seed) {
  if (n < folds) throw DimensionError("make_cv_plan: fewer samples than folds");
  CvPlan plan;
  plan.folds = folds;
  plan.repeats = repeats;
  for (int rep = 0; rep < repeats; ++rep) {
    rng::Stream stream(rng::substream(seed, "cv_shuffle", static_cast<std::uint64_t>(rep)));
    const auto order = stream.permutation(static_cast<std::size_t>(n));
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    const Index base = n / folds;
    const Index extra = n % folds;
    Index pos = 0;
    for (int f = 0; f < folds; ++f) {
      const Index size = base + (f < extra ? 1 : 0);
      for (Index k = 0; k < size; ++k) fold_of[order[static_cast<std::size_t>(pos + k)]] = f;
      pos += size;
    }
    plan.assignment.push_back(std::move(fold_of));
  }
  plan.validate(n);
  return plan;
}

Vector baseline_predict(const ResponseMatrix& train_y) {
  Vector means = Vector::Zero(train_y.cols());
  for (Index j = 0; j < train_y.cols(); ++j) {
    double sum = 0.0;
    long count = 0;
    for (Index i = 0; i < train_y.rows(); ++i)
      if (train_y.mask(i, j)) {
        sum += train_y.values(i, j);
        ++count;
      }
    means[j] = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }
  return means;
}

namespace {

struct FoldJob {
  int repeat = 0;
  int fold = 0;
  WeightMode mode = WeightMode::ComponentWise;
  std::string method;
};

ResponseMatrix take_rows(const ResponseMatrix& y, const std::vector<Index>& rows) {
  ResponseMatrix out;
  out.values.resize(static_cast<Index>(rows.size()), y.cols());
  out.mask.resize(static_cast<Index>(rows.size()), y.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.values.row(static_cast<Index>(k)) = y.values.row(rows[k]);
    out.mask.row(static_cast<Index>(k)) = y.mask.row(rows[k]);
    out.row_ids.push_back(y.row_ids[static_cast<std::size_t>(rows[k])]);
  }
  out.col_ids = y.col_ids;
  return out;
}

double fold_mse(const Matrix& pred, const ResponseMatrix& y, const std::vector<Index>& test_rows) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t k = 0; k < test_rows.size(); ++k)
    for (Index j = 0; j < y.cols(); ++j) {
      if (!y.mask(test_rows[k], j)) continue;
      const double d = pred(static_cast<Index>(k), j) - y.values(test_rows[k], j);
      sum += d * d;
      ++count;
    }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

std::map<std::string, EvaluationReport> cross_validate(const FeatureMatrix& expression,
                                                       const ViewPartition& views,
                                                       const ResponseMatrix& responses,
                                                       const ModelConfig& config,
                                                       const CvPlan& plan,
                                                       const CvOptions& options) {
  expression.validate();
  responses.validate();
  const Index n = expression.values.rows();
  if (responses.rows() != n)
    throw DimensionError("cross_validate: response rows must match expression samples");
  for (std::size_t i = 0; i < responses.row_ids.size(); ++i)
    if (responses.row_ids[i] != expression.sample_ids[i])
      throw DimensionError("cross_validate: sample ids of expression and responses disagree");
  plan.validate(n);

  const Index n_drugs = responses.cols();
  // per-view value blocks, sliced per fold below
  std::vector<Matrix> view_blocks;
  for (const auto& view : views.views) view_blocks.push_back(view_values(expression, view));

  struct MethodAccum {
    // predictions pooled across folds, one matrix per repeat
    std::vector<Matrix> predictions;
    Matrix mse;
  };
  std::map<std::string, MethodAccum> accum;
  for (const auto& method : options.methods) {
    MethodAccum a;
    a.predictions.assign(static_cast<std::size_t>(plan.repeats), Matrix::Zero(n, n_drugs));
    a.mse.setZero(plan.repeats, plan.folds);
    accum[method] = std::move(a);
  }

  // model-based jobs; the baseline is cheap and handled inline afterwards
  std::vector<FoldJob> jobs;
  for (int rep = 0; rep < plan.repeats; ++rep)
    for (int fold = 0; fold < plan.folds; ++fold)
      for (const auto& method : options.methods) {
        if (method == "baseline") continue;
        WeightMode mode;
        if (method == "componentwise") {
          mode = WeightMode::ComponentWise;
        } else if (method == "shared") {
          mode = WeightMode::SharedAcrossComponents;
        } else {
          throw DimensionError("cross_validate: unknown method '" + method + "'");
        }
        jobs.push_back({rep, fold, mode, method});
      }

  parallel_for(jobs.size(), options.jobs, [&](std::size_t idx) {
    const FoldJob& job = jobs[idx];
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < n; ++i) {
      if (plan.assignment[static_cast<std::size_t>(job.repeat)][static_cast<std::size_t>(i)] ==
          job.fold)
        test_rows.push_back(i);
      else
        train_rows.push_back(i);
    }

    KernelSet kx;
    std::vector<Kernel> cross;
    for (std::size_t v = 0; v < view_blocks.size(); ++v) {
      Matrix train(static_cast<Index>(train_rows.size()), view_blocks[v].cols());
      for (std::size_t k = 0; k < train_rows.size(); ++k)
        train.row(static_cast<Index>(k)) = view_blocks[v].row(train_rows[k]);
      Matrix test(static_cast<Index>(test_rows.size()), view_blocks[v].cols());
      for (std::size_t k = 0; k < test_rows.size(); ++k)
        test.row(static_cast<Index>(k)) = view_blocks[v].row(test_rows[k]);
      if (options.standardize_features) {
        const FeatureStats stats = standardize_features(train);
        apply_feature_stats(test, stats);
      }
      Kernel kt = gaussian_kernel(train);
      cross.push_back(cross_kernel(train, test, kt.width));
      kx.kernels.push_back(std::move(kt));
      kx.names.push_back(views.views[v].name);
    }

    // targets carry no side information here: single identity kernel
    KernelSet kz;
    kz.kernels.push_back(Kernel{Matrix::Identity(n_drugs, n_drugs), 1.0});
    kz.names.push_back("identity");

    ModelConfig cfg = config;
    cfg.weight_mode = job.mode;
    cfg.seed = rng::substream(config.seed, "cv_fit", static_cast<std::uint64_t>(job.repeat),
                              static_cast<std::uint64_t>(job.fold));
    const FittedModel model = fit(cfg, kx, kz, take_rows(responses, train_rows));
    const Matrix pred = model.predict_new_rows(cross);

    auto& slot = accum[job.method];
    for (std::size_t k = 0; k < test_rows.size(); ++k)
      slot.predictions[static_cast<std::size_t>(job.repeat)].row(test_rows[k]) =
          pred.row(static_cast<Index>(k));
    slot.mse(job.repeat, job.fold) = fold_mse(pred, responses, test_rows);
  });

  const bool want_baseline =
      std::find(options.methods.begin(), options.methods.end(), "baseline") !=
      options.methods.end();
  if (want_baseline) {
    auto& slot = accum["baseline"];
    for (int rep = 0; rep < plan.repeats; ++rep)
      for (int fold = 0; fold < plan.folds; ++fold) {
        std::vector<Index> train_rows, test_rows;
        for (Index i = 0; i < n; ++i) {
          if (plan.assignment[static_cast<std::size_t>(rep)][static_cast<std::size_t>(i)] == fold)
            test_rows.push_back(i);
          else
            train_rows.push_back(i);
        }
        const Vector means = baseline_predict(take_rows(responses, train_rows));
        Matrix pred(static_cast<Index>(test_rows.size()), n_drugs);
        pred.rowwise() = means.transpose();
        for (std::size_t k = 0; k < test_rows.size(); ++k)
          slot.predictions[static_cast<std::size_t>(rep)].row(test_rows[k]) =
              pred.row(static_cast<Index>(k));
        slot.mse(rep, fold) = fold_mse(pred, responses, test_rows);
      }
  }

  std::map<std::string, EvaluationReport> reports;
  for (const auto& method : options.methods) {
    const auto& slot = accum[method];
    EvaluationReport report;
    report.method = method;
    report.folds = plan.folds;
    report.repeats = plan.repeats;
    report.seed = config.seed;
    report.per_fold_mse = slot.mse;

    for (Index j = 0; j < n_drugs; ++j) {
      DrugScore score;
      score.drug = responses.col_ids[static_cast<std::size_t>(j)];
      double sum = 0.0;
      for (int rep = 0; rep < plan.repeats; ++rep) {
        std::vector<double> pred, truth;
        for (Index i = 0; i < n; ++i) {
          if (!responses.mask(i, j)) continue;
          pred.push_back(slot.predictions[static_cast<std::size_t>(rep)](i, j));
          truth.push_back(responses.values(i, j));
        }
        double rho = 0.0;
        if (pred.size() < 2 || is_constant(pred) || is_constant(truth)) {
          score.undefined = true;
        } else {
          rho = spearman(pred, truth);
        }
        sum += rho;
      }
      score.rho = sum / static_cast<double>(plan.repeats);
      report.per_drug.push_back(std::move(score));
    }
    double total = 0.0;
    for (const auto& d : report.per_drug) total += d.rho;
    report.cumulative_rho =
        report.per_drug.empty() ? 0.0 : total / static_cast<double>(report.per_drug.size());
    reports[method] = std::move(report);
  }
  return reports;
}

std::string report_tsv(const std::map<std::string, EvaluationReport>& reports) {
  std::ostringstream out;
  out << "method\tdrug\trho\n";
  for (const auto& [method, report] : reports)
    for (const auto& d : report.per_drug)
      out << method << '\t' << d.drug << '\t' << format_double(d.rho) << '\n';
  return out.str();
}

void write_report_json(const std::filesystem::path& path,
                       const std::map<std::string, EvaluationReport>& reports) {
  nlohmann::json root;
  for (const auto& [method, report] : reports) {
    nlohmann::json r;
    r["method"] = report.method;
    r["folds"] = report.folds;
    r["repeats"] = report.repeats;
    r["seed"] = report.seed;
    r["cumulative_rho"] = report.cumulative_rho;
    r["per_drug"] = nlohmann::json::array();
    for (const auto& d : report.per_drug)
      r["per_drug"].push_back({{"drug", d.drug}, {"rho", d.rho}, {"undefined", d.undefined}});
    r["per_fold_mse"] = nlohmann::json::array();
    for (Index rep = 0; rep < report.per_fold_mse.rows(); ++rep) {
      nlohmann::json row = nlohmann::json::array();
      for (Index f = 0; f < report.per_fold_mse.cols(); ++f)
        row.push_back(report.per_fold_mse(rep, f));
      r["per_fold_mse"].push_back(row);
    }
    root[method] = std::move(r);
  }
  write_text_file(path, root.dump(2) + "\n");
}

}  // namespace cwkbmf
