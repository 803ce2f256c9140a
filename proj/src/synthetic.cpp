#include "cwkbmf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cwkbmf/io.hpp"
#include "cwkbmf/kernels.hpp"
#include "cwkbmf/parallel.hpp"
#include "cwkbmf/rng.hpp"

namespace cwkbmf {

void SyntheticSpec::validate() const {
  if (n_x < 2 || n_z < 2) throw DimensionError("SyntheticSpec: need at least two samples per side");
  if (components < 1) throw DimensionError("SyntheticSpec: components must be >= 1");
  if (p_x < components + 2)
    throw DimensionError("SyntheticSpec: p_x must be >= components + 2 so that shared, specific "
                         "and empty views all exist");
  if (view_dim < 1) throw DimensionError("SyntheticSpec: view_dim must be >= 1");
  if (!(noise_y >= 0.0) || !(noise_h >= 0.0))
    throw DimensionError("SyntheticSpec: noise levels must be non-negative");
  if (!(missing_fraction >= 0.0) || missing_fraction >= 1.0)
    throw DimensionError("SyntheticSpec: missing_fraction must lie in [0, 1)");
}

bool ActivityMask::is_shared(Index m) const { return activity.row(m).all(); }
bool ActivityMask::is_empty(Index m) const { return !activity.row(m).any(); }

std::vector<Index> ActivityMask::shared_views() const {
  std::vector<Index> v;
  for (Index m = 0; m < p(); ++m)
    if (is_shared(m)) v.push_back(m);
  return v;
}

std::vector<Index> ActivityMask::specific_views() const {
  std::vector<Index> v;
  for (Index m = 0; m < p(); ++m) {
    Index count = 0;
    for (Index s = 0; s < r(); ++s) count += activity(m, s) ? 1 : 0;
    if (count == 1) v.push_back(m);
  }
  return v;
}

std::vector<Index> ActivityMask::empty_views() const {
  std::vector<Index> v;
  for (Index m = 0; m < p(); ++m)
    if (is_empty(m)) v.push_back(m);
  return v;
}

ActivityMask canonical_activity(Index p, int r) {
  if (r < 1) throw DimensionError("canonical_activity: r must be >= 1");
  if (p < r + 2)
    throw DimensionError("canonical_activity: p must be >= r + 2");
  ActivityMask mask;
  mask.activity.setConstant(p, r, false);
  mask.activity.row(0).setConstant(true);
  // categories 0..r-1 are "specific to component s", category r is "empty"
  for (Index m = 1; m < p; ++m) {
    const Index category = (m - 1) % (r + 1);
    if (category < r) mask.activity(m, category) = true;
  }
  return mask;
}

namespace {

Matrix draw_normal(rng::Stream& stream, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = stream.next_normal();
  return m;
}

}  // namespace

SyntheticDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index n = spec.n_x;
  const Index nz = spec.n_z;
  const Index p = spec.p_x;
  const Index r = spec.components;

  SyntheticDataset data;
  data.truth = canonical_activity(p, static_cast<int>(r));

  // true component scores on both sides: iid standard normal columns
  rng::Stream hx_stream(rng::substream(spec.seed, "synth_hx"));
  data.true_h_x = draw_normal(hx_stream, n, r);
  rng::Stream hz_stream(rng::substream(spec.seed, "synth_hz"));
  data.true_h_z = draw_normal(hz_stream, nz, r);

  // a view is active in a component exactly when its features carry that
  // component's scores: every active (view, component) pair gets the same
  // number of feature columns holding noisy copies of the component scores,
  // remaining columns are pure noise.  every column has unit variance by
  // construction, so active and empty views share the same N(0, 1)
  // marginals and differ only in geometry.
  const double tau = spec.noise_h;
  const double col_scale = 1.0 / std::sqrt(1.0 + tau * tau);
  const Index per_pair = std::max<Index>(1, spec.view_dim / (2 * r));
  for (Index m = 0; m < p; ++m) {
    rng::Stream feat(rng::substream(spec.seed, "synth_xfeat", static_cast<std::uint64_t>(m)));
    Matrix x_m = draw_normal(feat, n, spec.view_dim);
    Index c = 0;
    for (Index s = 0; s < r; ++s) {
      if (!data.truth.activity(m, s)) continue;
      for (Index k = 0; k < per_pair && c < spec.view_dim; ++k, ++c)
        x_m.col(c) = col_scale * (data.true_h_x.col(s) + tau * x_m.col(c));
    }
    data.features_x.push_back(std::move(x_m));
    data.kernels_x.kernels.push_back(gaussian_kernel(data.features_x.back()));
    data.kernels_x.names.push_back("view_" + std::to_string(m));
  }

  // the single drug-side view is informative of all z components
  rng::Stream zfeat(rng::substream(spec.seed, "synth_zfeat"));
  Matrix x_z = draw_normal(zfeat, nz, spec.view_dim);
  {
    Index c = 0;
    for (Index s = 0; s < r; ++s)
      for (Index k = 0; k < per_pair && c < spec.view_dim; ++k, ++c)
        x_z.col(c) = col_scale * (data.true_h_z.col(s) + tau * x_z.col(c));
  }
  data.features_z = std::move(x_z);
  data.kernel_z.kernels.push_back(gaussian_kernel(data.features_z));
  data.kernel_z.names.push_back("z_view");

  rng::Stream ynoise(rng::substream(spec.seed, "synth_ynoise"));
  data.y.values =
      data.true_h_x * data.true_h_z.transpose() + spec.noise_y * draw_normal(ynoise, n, nz);

  // held-out cells drawn from their own stream so values are unaffected
  data.test_mask.setConstant(n, nz, false);
  const auto total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(nz);
  const auto n_test = static_cast<std::uint64_t>(
      std::llround(spec.missing_fraction * static_cast<double>(total)));
  rng::Stream mask_stream(rng::substream(spec.seed, "synth_mask"));
  std::vector<std::uint64_t> cells(total);
  std::iota(cells.begin(), cells.end(), 0);
  for (std::uint64_t k = 0; k < n_test; ++k) {
    const std::uint64_t pick = k + mask_stream.next_below(total - k);
    std::swap(cells[k], cells[pick]);
    const auto cell = cells[k];
    data.test_mask(static_cast<Index>(cell / static_cast<std::uint64_t>(nz)),
                   static_cast<Index>(cell % static_cast<std::uint64_t>(nz))) = true;
  }
  data.y.mask = !data.test_mask;

  for (Index i = 0; i < n; ++i) data.y.row_ids.push_back("cell_" + std::to_string(i));
  for (Index j = 0; j < nz; ++j) data.y.col_ids.push_back("drug_" + std::to_string(j));
  return data;
}

namespace {

struct AgreementTable {
  // agree[c][s * r + t]: matching cells between truth column s and
  // inferred column t, restricted to category c in {shared, specific, empty}
  std::array<Matrix, 3> agree;
  std::array<double, 3> cells_per_column{};
};

AgreementTable build_agreement(const ActivityMask& truth, const BoolArray& inferred) {
  const Index p = truth.p();
  const Index r = truth.r();
  const std::array<std::vector<Index>, 3> rows = {truth.shared_views(), truth.specific_views(),
                                                  truth.empty_views()};
  AgreementTable table;
  for (int c = 0; c < 3; ++c) {
    table.agree[c].setZero(r, r);
    table.cells_per_column[c] = static_cast<double>(rows[c].size());
    for (Index s = 0; s < r; ++s)
      for (Index t = 0; t < r; ++t) {
        double count = 0.0;
        for (Index m : rows[c])
          if (truth.activity(m, s) == inferred(m, t)) count += 1.0;
        table.agree[c](s, t) = count;
      }
  }
  (void)p;
  return table;
}

RecoveryScores scores_under(const AgreementTable& table, const std::vector<Index>& perm) {
  const auto r = static_cast<double>(perm.size());
  RecoveryScores out;
  double* fields[3] = {&out.shared, &out.specific, &out.empty};
  for (int c = 0; c < 3; ++c) {
    double agree = 0.0;
    for (std::size_t s = 0; s < perm.size(); ++s)
      agree += table.agree[c](static_cast<Index>(s), perm[s]);
    const double cells = table.cells_per_column[c] * r;
    *fields[c] = cells > 0.0 ? agree / cells : 1.0;
  }
  return out;
}

}  // namespace

RecoveryScores recovery_accuracy(const ActivityMask& truth, const BoolArray& inferred,
                                 bool allow_greedy) {
  const Index p = truth.p();
  const Index r = truth.r();
  if (inferred.rows() != p || inferred.cols() != r)
    throw DimensionError("recovery_accuracy: inferred activity shape mismatch");

  const AgreementTable table = build_agreement(truth, inferred);
  const Matrix total = table.agree[0] + table.agree[1] + table.agree[2];

  std::vector<Index> best(r);
  if (r <= 8) {
    std::vector<Index> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    double best_score = -1.0;
    do {
      double score = 0.0;
      for (Index s = 0; s < r; ++s) score += total(s, perm[static_cast<std::size_t>(s)]);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else if (allow_greedy) {
    // repeatedly take the best remaining (truth, inferred) column pair
    std::vector<bool> used_s(r, false), used_t(r, false);
    for (Index step = 0; step < r; ++step) {
      double top = -1.0;
      Index bs = -1, bt = -1;
      for (Index s = 0; s < r; ++s) {
        if (used_s[static_cast<std::size_t>(s)]) continue;
        for (Index t = 0; t < r; ++t) {
          if (used_t[static_cast<std::size_t>(t)]) continue;
          if (total(s, t) > top) {
            top = total(s, t);
            bs = s;
            bt = t;
          }
        }
      }
      used_s[static_cast<std::size_t>(bs)] = true;
      used_t[static_cast<std::size_t>(bt)] = true;
      best[static_cast<std::size_t>(bs)] = bt;
    }
  } else {
    throw DimensionError("recovery_accuracy: exhaustive matching is limited to r <= 8; pass "
                         "allow_greedy = true for a greedy column matching");
  }
  return scores_under(table, best);
}

double test_mse(const FittedModel& model, const SyntheticDataset& data) {
  const Matrix pred = model.predict_in_matrix();
  double sum = 0.0;
  long count = 0;
  for (Index i = 0; i < data.test_mask.rows(); ++i)
    for (Index j = 0; j < data.test_mask.cols(); ++j) {
      if (!data.test_mask(i, j)) continue;
      const double d = pred(i, j) - data.y.values(i, j);
      sum += d * d;
      ++count;
    }
  if (count == 0) throw DimensionError("test_mse: dataset has no held-out cells");
  return sum / static_cast<double>(count);
}

std::vector<BenchmarkRow> run_benchmark(const SyntheticSpec& base,
                                        const std::vector<Index>& p_x_values, int n_datasets,
                                        const ModelConfig& config, int jobs,
                                        double activity_threshold, ZScoreMode zscore_mode) {
  if (n_datasets < 1) throw DimensionError("run_benchmark: need at least one dataset");
  struct JobResult {
    double mse = 0.0;
    RecoveryScores rec;
  };
  const std::vector<WeightMode> modes = {WeightMode::ComponentWise,
                                         WeightMode::SharedAcrossComponents};
  std::vector<BenchmarkRow> rows;

  for (Index px : p_x_values) {
    std::vector<std::array<JobResult, 2>> results(static_cast<std::size_t>(n_datasets));
    parallel_for(static_cast<std::size_t>(n_datasets), jobs, [&](std::size_t d) {
      SyntheticSpec spec = base;
      spec.p_x = px;
      spec.seed = rng::substream(base.seed, "benchmark", static_cast<std::uint64_t>(px), d);
      const SyntheticDataset data = generate(spec);
      ResponseMatrix train = data.y;
      train.values = data.y.mask.select(data.y.values, Matrix::Zero(data.y.rows(), data.y.cols()));
      for (std::size_t mode_idx = 0; mode_idx < modes.size(); ++mode_idx) {
        ModelConfig cfg = config;
        cfg.weight_mode = modes[mode_idx];
        cfg.seed = rng::substream(spec.seed, "benchmark_fit", mode_idx);
        KernelSet kx = data.kernels_x;
        const FittedModel model = fit(cfg, kx, data.kernel_z, train);
        JobResult res;
        res.mse = test_mse(model, data);
        const Matrix z = model.posterior_kernel_weights(zscore_mode).zscores_x;
        const BoolArray inferred = z.array() > activity_threshold;
        res.rec = recovery_accuracy(data.truth, inferred);
        results[d][mode_idx] = res;
      }
    });

    for (std::size_t mode_idx = 0; mode_idx < modes.size(); ++mode_idx) {
      BenchmarkRow row;
      row.p_x = px;
      row.method = modes[mode_idx] == WeightMode::ComponentWise ? "componentwise" : "shared";
      double sum = 0.0, sum2 = 0.0;
      for (const auto& res : results) {
        sum += res[mode_idx].mse;
        row.acc_shared += res[mode_idx].rec.shared;
        row.acc_specific += res[mode_idx].rec.specific;
        row.acc_empty += res[mode_idx].rec.empty;
      }
      const auto nd = static_cast<double>(n_datasets);
      row.mse_mean = sum / nd;
      for (const auto& res : results) {
        const double d = res[mode_idx].mse - row.mse_mean;
        sum2 += d * d;
      }
      row.mse_se = n_datasets > 1 ? std::sqrt(sum2 / (nd - 1.0) / nd) : 0.0;
      row.acc_shared /= nd;
      row.acc_specific /= nd;
      row.acc_empty /= nd;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string benchmark_table_tsv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << "px\tmethod\tmse_mean\tmse_se\tacc_shared\tacc_specific\tacc_empty\n";
  for (const auto& r : rows)
    out << r.p_x << '\t' << r.method << '\t' << format_double(r.mse_mean) << '\t'
        << format_double(r.mse_se) << '\t' << format_double(r.acc_shared) << '\t'
        << format_double(r.acc_specific) << '\t' << format_double(r.acc_empty) << '\n';
  return out.str();
}

}  // namespace cwkbmf
