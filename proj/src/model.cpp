#include "cwkbmf/model.hpp"

#include <chrono>
#include <cmath>

#include "cwkbmf/rng.hpp"
#include "model_impl.hpp"

namespace cwkbmf {

void Hyperparameters::validate() const {
  const double v[] = {alpha_lambda, beta_lambda, alpha_eta, beta_eta, sigma_g, sigma_h, sigma_y};
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw DimensionError("Hyperparameters: all entries must be positive and finite");
}

void ModelConfig::validate() const {
  if (components < 1) throw DimensionError("ModelConfig: components must be >= 1");
  if (max_sweeps < 0) throw DimensionError("ModelConfig: max_sweeps must be >= 0");
  if (!(elbo_rel_tol >= 0.0)) throw DimensionError("ModelConfig: elbo_rel_tol must be >= 0");
  hyper.validate();
}

const char* factor_name(Factor f) {
  switch (f) {
    case Factor::XLambda: return "x.lambda";
    case Factor::XA: return "x.A";
    case Factor::XG: return "x.G";
    case Factor::XEta: return "x.eta";
    case Factor::XE: return "x.e";
    case Factor::XH: return "x.H";
    case Factor::ZLambda: return "z.lambda";
    case Factor::ZA: return "z.A";
    case Factor::ZG: return "z.G";
    case Factor::ZEta: return "z.eta";
    case Factor::ZE: return "z.e";
    case Factor::ZH: return "z.H";
  }
  return "?";
}

std::vector<Factor> sweep_order() {
  return {Factor::XLambda, Factor::XA, Factor::XG, Factor::XEta, Factor::XE, Factor::XH,
          Factor::ZLambda, Factor::ZA, Factor::ZG, Factor::ZEta, Factor::ZE, Factor::ZH};
}

namespace detail {

Matrix spd_inverse(const Matrix& prec, const char* factor) {
  const Index n = prec.rows();
  double scale = prec.diagonal().cwiseAbs().mean();
  if (!(scale > 0.0)) scale = 1.0;
  for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
    Matrix attempt = prec;
    attempt.diagonal().array() += jitter * scale;
    Eigen::LLT<Matrix> llt(attempt);
    if (llt.info() == Eigen::Success) {
      Matrix inv = llt.solve(Matrix::Identity(n, n));
      return 0.5 * (inv + inv.transpose()).eval();
    }
  }
  throw NumericalError(factor, "precision not positive definite despite jitter up to 1e-6");
}

double logdet_spd(const Matrix& m, const char* factor) {
  double scale = m.diagonal().cwiseAbs().mean();
  if (!(scale > 0.0)) scale = 1.0;
  for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
    Matrix attempt = m;
    attempt.diagonal().array() += jitter * scale;
    Eigen::LLT<Matrix> llt(attempt);
    if (llt.info() == Eigen::Success)
      return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  throw NumericalError(factor, "covariance not positive definite despite jitter up to 1e-6");
}

void check_finite(const Matrix& m, const char* factor) {
  if (!m.allFinite()) throw NumericalError(factor, "non-finite values after update");
}

}  // namespace detail

using detail::check_finite;
using detail::spd_inverse;

namespace {

void check_kernel_psd(const Kernel& k, const std::string& name) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k.values, Eigen::EigenvaluesOnly);
  const double max_abs = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, max_abs))
    throw DimensionError("kernel '" + name + "' is not positive semi-definite");
}

SideProblem build_side(const KernelSet& ks, const Matrix& y, const BoolArray& mask) {
  SideProblem side;
  const Index n = ks.n_samples();
  side.kernels.reserve(ks.size());
  for (const auto& k : ks.kernels) side.kernels.push_back(k.values);
  side.kk.setZero(n, n);
  for (const auto& k : side.kernels) side.kk.noalias() += k * k;
  side.kk = 0.5 * (side.kk + side.kk.transpose()).eval();

  side.y0 = mask.select(y, Matrix::Zero(y.rows(), y.cols()));
  side.missing_in_row.assign(static_cast<std::size_t>(y.rows()), {});
  for (Index i = 0; i < y.rows(); ++i)
    for (Index j = 0; j < y.cols(); ++j)
      if (!mask(i, j)) side.missing_in_row[static_cast<std::size_t>(i)].push_back(j);
  return side;
}

}  // namespace

Inference::Inference(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
                     const ResponseMatrix& y)
    : impl_(std::make_unique<Impl>()) {
  config.validate();
  kx.validate();
  kz.validate();
  y.validate();
  if (kx.n_samples() != y.rows())
    throw DimensionError("sample-side kernels have " + std::to_string(kx.n_samples()) +
                         " samples but the response has " + std::to_string(y.rows()) + " rows");
  if (kz.n_samples() != y.cols())
    throw DimensionError("target-side kernels have " + std::to_string(kz.n_samples()) +
                         " samples but the response has " + std::to_string(y.cols()) + " columns");
  for (std::size_t m = 0; m < kx.size(); ++m) check_kernel_psd(kx.kernels[m], kx.names[m]);
  for (std::size_t m = 0; m < kz.size(); ++m) check_kernel_psd(kz.kernels[m], kz.names[m]);

  impl_->cfg = config;
  impl_->x = build_side(kx, y.values, y.mask);
  impl_->z = build_side(kz, y.values.transpose(), y.mask.transpose());
  impl_->n_obs = y.observed_count();
  impl_->sum_y2_obs = y.mask.select(y.values, Matrix::Zero(y.rows(), y.cols())).squaredNorm();
  impl_->any_missing = impl_->n_obs != y.rows() * y.cols();
}

Inference::~Inference() = default;

const ModelConfig& Inference::config() const { return impl_->cfg; }

namespace {

SideState init_side(const SideProblem& prob, const ModelConfig& cfg, std::uint64_t side_tag) {
  const Index n = prob.kernels.front().rows();
  const Index p = static_cast<Index>(prob.kernels.size());
  const Index r = cfg.components;
  const auto& hp = cfg.hyper;

  SideState s;
  s.lambda_shape = Matrix::Constant(n, r, hp.alpha_lambda);
  s.lambda_scale = Matrix::Constant(n, r, hp.beta_lambda);

  const std::uint64_t key = rng::substream(cfg.seed, "init_a", side_tag);
  s.a_mean.resize(n, r);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < r; ++c)
      s.a_mean(i, c) = rng::keyed_normal(key, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(c));
  s.a_cov.assign(static_cast<std::size_t>(r),
                 Matrix::Identity(n, n) / (hp.alpha_lambda * hp.beta_lambda));

  s.g_mean.reserve(static_cast<std::size_t>(p));
  for (Index m = 0; m < p; ++m)
    s.g_mean.push_back(prob.kernels[static_cast<std::size_t>(m)] * s.a_mean);
  // unit starting variances (not sigma_g^2): tight ones make the first e-update
  // see near-deterministic projections and lets whole components collapse early
  s.g_var = Matrix::Ones(p, r);

  const bool shared = cfg.weight_mode == WeightMode::SharedAcrossComponents;
  const Index eta_cols = shared ? 1 : r;
  s.eta_shape = Matrix::Constant(p, eta_cols, hp.alpha_eta);
  s.eta_scale = Matrix::Constant(p, eta_cols, hp.beta_eta);
  s.e_mean = Matrix::Constant(p, r, 1.0);
  s.e_cov.assign(shared ? 1 : static_cast<std::size_t>(r),
                 Matrix::Identity(p, p) / (hp.alpha_eta * hp.beta_eta));

  s.h_mean.setZero(n, r);
  for (Index m = 0; m < p; ++m)
    s.h_mean.noalias() += s.g_mean[static_cast<std::size_t>(m)];
  s.h_cov.assign(static_cast<std::size_t>(n), Matrix::Identity(r, r));
  return s;
}

// ---- factor updates; each is the exact optimum given all other blocks ----

void update_lambda(SideState& s, const Hyperparameters& hp, const char* fname) {
  const Index r = s.r();
  s.lambda_shape.setConstant(hp.alpha_lambda + 0.5);
  for (Index c = 0; c < r; ++c) {
    const auto& cov = s.a_cov[static_cast<std::size_t>(c)];
    s.lambda_scale.col(c) =
        (1.0 / hp.beta_lambda +
         0.5 * (s.a_mean.col(c).array().square() + cov.diagonal().array()))
            .inverse()
            .matrix();
  }
  check_finite(s.lambda_scale, fname);
}

void update_a(SideState& s, const SideProblem& prob, const Hyperparameters& hp,
              const char* fname) {
  const Index n = s.n();
  const Index r = s.r();
  const double inv_sg2 = 1.0 / (hp.sigma_g * hp.sigma_g);

  Matrix kg = Matrix::Zero(n, r);
  for (std::size_t m = 0; m < prob.kernels.size(); ++m)
    kg.noalias() += prob.kernels[m] * s.g_mean[m];

  for (Index c = 0; c < r; ++c) {
    Matrix prec = prob.kk * inv_sg2;
    prec.diagonal() += (s.lambda_shape.col(c).array() * s.lambda_scale.col(c).array()).matrix();
    s.a_cov[static_cast<std::size_t>(c)] = spd_inverse(prec, fname);
    s.a_mean.col(c).noalias() =
        s.a_cov[static_cast<std::size_t>(c)] * (kg.col(c) * inv_sg2);
  }
  check_finite(s.a_mean, fname);
}

// second moment of the weight column for component c
Matrix e_second_moment(const SideState& s, Index c, bool shared) {
  const auto& cov = s.e_cov[shared ? 0 : static_cast<std::size_t>(c)];
  return s.e_mean.col(c) * s.e_mean.col(c).transpose() + cov;
}

void update_g(SideState& s, const SideProblem& prob, const Hyperparameters& hp, bool shared,
              const char* fname) {
  const Index n = s.n();
  const Index r = s.r();
  const Index p = s.p();
  const double inv_sg2 = 1.0 / (hp.sigma_g * hp.sigma_g);
  const double inv_sh2 = 1.0 / (hp.sigma_h * hp.sigma_h);

  std::vector<Matrix> ka(static_cast<std::size_t>(p));
  for (Index m = 0; m < p; ++m)
    ka[static_cast<std::size_t>(m)].noalias() =
        prob.kernels[static_cast<std::size_t>(m)] * s.a_mean;

  Matrix w(n, p);
  for (Index c = 0; c < r; ++c) {
    const Matrix e2 = e_second_moment(s, c, shared);
    for (Index m = 0; m < p; ++m) w.col(m) = s.g_mean[static_cast<std::size_t>(m)].col(c);
    for (Index m = 0; m < p; ++m) {
      const double var = 1.0 / (inv_sg2 + e2(m, m) * inv_sh2);
      s.g_var(m, c) = var;
      Vector cross = w * e2.col(m) - e2(m, m) * w.col(m);
      Vector lin = ka[static_cast<std::size_t>(m)].col(c) * inv_sg2 +
                   (s.e_mean(m, c) * s.h_mean.col(c) - cross) * inv_sh2;
      w.col(m) = var * lin;
      s.g_mean[static_cast<std::size_t>(m)].col(c) = w.col(m);
    }
  }
  for (Index m = 0; m < p; ++m) check_finite(s.g_mean[static_cast<std::size_t>(m)], fname);
}

void update_eta(SideState& s, const Hyperparameters& hp, bool shared, const char* fname) {
  s.eta_shape.setConstant(hp.alpha_eta + 0.5);
  const Index cols = s.eta_scale.cols();
  for (Index c = 0; c < cols; ++c) {
    const auto& cov = s.e_cov[shared ? 0 : static_cast<std::size_t>(c)];
    s.eta_scale.col(c) =
        (1.0 / hp.beta_eta +
         0.5 * (s.e_mean.col(c).array().square() + cov.diagonal().array()))
            .inverse()
            .matrix();
  }
  check_finite(s.eta_scale, fname);
}

void update_e(SideState& s, const Hyperparameters& hp, bool shared, const char* fname) {
  const Index n = s.n();
  const Index r = s.r();
  const Index p = s.p();
  const double inv_sh2 = 1.0 / (hp.sigma_h * hp.sigma_h);

  Matrix w(n, p);
  if (shared) {
    Matrix prec = Matrix::Zero(p, p);
    prec.diagonal() = (s.eta_shape.col(0).array() * s.eta_scale.col(0).array()).matrix();
    Vector rhs = Vector::Zero(p);
    for (Index c = 0; c < r; ++c) {
      for (Index m = 0; m < p; ++m) w.col(m) = s.g_mean[static_cast<std::size_t>(m)].col(c);
      prec.noalias() += (w.transpose() * w) * inv_sh2;
      prec.diagonal() += static_cast<double>(n) * inv_sh2 * s.g_var.col(c);
      rhs.noalias() += w.transpose() * s.h_mean.col(c) * inv_sh2;
    }
    s.e_cov[0] = spd_inverse(prec, fname);
    s.e_mean = (s.e_cov[0] * rhs).replicate(1, r);
  } else {
    for (Index c = 0; c < r; ++c) {
      for (Index m = 0; m < p; ++m) w.col(m) = s.g_mean[static_cast<std::size_t>(m)].col(c);
      Matrix prec = (w.transpose() * w) * inv_sh2;
      prec.diagonal() += static_cast<double>(n) * inv_sh2 * s.g_var.col(c);
      prec.diagonal() += (s.eta_shape.col(c).array() * s.eta_scale.col(c).array()).matrix();
      s.e_cov[static_cast<std::size_t>(c)] = spd_inverse(prec, fname);
      s.e_mean.col(c).noalias() =
          s.e_cov[static_cast<std::size_t>(c)] * (w.transpose() * s.h_mean.col(c)) * inv_sh2;
    }
  }
  check_finite(s.e_mean, fname);
}

void update_h(SideState& s, const SideState& other, const SideProblem& prob,
              const Hyperparameters& hp, const char* fname) {
  const Index n = s.n();
  const Index r = s.r();
  const Index p = s.p();
  const double inv_sh2 = 1.0 / (hp.sigma_h * hp.sigma_h);
  const double inv_sy2 = 1.0 / (hp.sigma_y * hp.sigma_y);

  Matrix s_all = other.h_mean.transpose() * other.h_mean;
  for (const auto& cov : other.h_cov) s_all += cov;

  Matrix prior_mean = Matrix::Zero(n, r);
  for (Index m = 0; m < p; ++m)
    prior_mean.array() +=
        s.g_mean[static_cast<std::size_t>(m)].array().rowwise() * s.e_mean.row(m).array();

  const Matrix lin_like = prob.y0 * other.h_mean;

  const Matrix eye = Matrix::Identity(r, r);
  for (Index i = 0; i < n; ++i) {
    Matrix si = s_all;
    for (Index j : prob.missing_in_row[static_cast<std::size_t>(i)]) {
      si.noalias() -= other.h_mean.row(j).transpose() * other.h_mean.row(j);
      si -= other.h_cov[static_cast<std::size_t>(j)];
    }
    const Matrix prec = eye * inv_sh2 + si * inv_sy2;
    s.h_cov[static_cast<std::size_t>(i)] = spd_inverse(prec, fname);
    s.h_mean.row(i) =
        (s.h_cov[static_cast<std::size_t>(i)] *
         (prior_mean.row(i).transpose() * inv_sh2 + lin_like.row(i).transpose() * inv_sy2))
            .transpose();
  }
  check_finite(s.h_mean, fname);
}

}  // namespace

VariationalState Inference::initialize() const {
  VariationalState state;
  state.x = init_side(impl_->x, impl_->cfg, 0);
  state.z = init_side(impl_->z, impl_->cfg, 1);
  // seed both factor means from the response's leading singular structure;
  // starting the two sides aligned on the same components means none of them
  // has to bootstrap out of an unaligned random start, which is the usual way
  // a component dies before its first useful update
  const Index r = impl_->cfg.components;
  Eigen::BDCSVD<Matrix> svd(impl_->x.y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index k = std::min<Index>(r, svd.singularValues().size());
  const Vector scale = svd.singularValues().head(k).cwiseSqrt();
  state.x.h_mean.leftCols(k) = svd.matrixU().leftCols(k) * scale.asDiagonal();
  state.z.h_mean.leftCols(k) = svd.matrixV().leftCols(k) * scale.asDiagonal();
  return state;
}

void Inference::update_factor(VariationalState& state, Factor f) const {
  const auto& hp = impl_->cfg.hyper;
  const bool shared = impl_->cfg.weight_mode == WeightMode::SharedAcrossComponents;
  const char* fname = factor_name(f);
  switch (f) {
    case Factor::XLambda: update_lambda(state.x, hp, fname); break;
    case Factor::XA: update_a(state.x, impl_->x, hp, fname); break;
    case Factor::XG: update_g(state.x, impl_->x, hp, shared, fname); break;
    case Factor::XEta: update_eta(state.x, hp, shared, fname); break;
    case Factor::XE: update_e(state.x, hp, shared, fname); break;
    case Factor::XH: update_h(state.x, state.z, impl_->x, hp, fname); break;
    case Factor::ZLambda: update_lambda(state.z, hp, fname); break;
    case Factor::ZA: update_a(state.z, impl_->z, hp, fname); break;
    case Factor::ZG: update_g(state.z, impl_->z, hp, shared, fname); break;
    case Factor::ZEta: update_eta(state.z, hp, shared, fname); break;
    case Factor::ZE: update_e(state.z, hp, shared, fname); break;
    case Factor::ZH: update_h(state.z, state.x, impl_->z, hp, fname); break;
  }
}

void Inference::sweep(VariationalState& state) const {
  for (Factor f : sweep_order()) update_factor(state, f);
  ++state.sweep_count;
}

VariationalState initialize(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
                            const ResponseMatrix& y) {
  return Inference(config, kx, kz, y).initialize();
}

VariationalState update_sweep(const VariationalState& state, const ModelConfig& config,
                              const KernelSet& kx, const KernelSet& kz, const ResponseMatrix& y) {
  Inference eng(config, kx, kz, y);
  VariationalState next = state;
  eng.sweep(next);
  return next;
}

double elbo(const VariationalState& state, const ModelConfig& config, const KernelSet& kx,
            const KernelSet& kz, const ResponseMatrix& y) {
  return Inference(config, kx, kz, y).elbo(state);
}

FittedModel fit(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
                const ResponseMatrix& y) {
  config.validate();
  y.validate();

  FittedModel model;
  model.config = config;
  model.kernels_x = kx;
  model.kernels_z = kz;
  model.row_ids = y.row_ids;
  model.col_ids = y.col_ids;

  // per-column normalization over observed entries
  ResponseMatrix yn = y;
  const Index nc = y.cols();
  model.col_mean.setZero(nc);
  model.col_std.setOnes(nc);
  for (Index j = 0; j < nc; ++j) {
    double sum = 0.0, sum2 = 0.0;
    long cnt = 0;
    for (Index i = 0; i < y.rows(); ++i) {
      if (!y.mask(i, j)) continue;
      sum += y.values(i, j);
      sum2 += y.values(i, j) * y.values(i, j);
      ++cnt;
    }
    if (cnt == 0) {
      model.warnings.push_back("column '" + y.col_ids[static_cast<std::size_t>(j)] +
                               "' has no observed entries");
      continue;
    }
    const double mean = sum / static_cast<double>(cnt);
    const double var = std::max(0.0, sum2 / static_cast<double>(cnt) - mean * mean);
    double sd = std::sqrt(var);
    if (sd < 1e-12) {
      sd = 1.0;
      model.warnings.push_back("column '" + y.col_ids[static_cast<std::size_t>(j)] +
                               "' is constant over observed entries; using unit scale");
    }
    model.col_mean[j] = mean;
    model.col_std[j] = sd;
    for (Index i = 0; i < y.rows(); ++i)
      if (y.mask(i, j)) yn.values(i, j) = (y.values(i, j) - mean) / sd;
  }

  Inference eng(config, kx, kz, yn);
  VariationalState state = eng.initialize();
  state.elbo_trace.push_back(eng.elbo(state));

  for (int t = 0; t < config.max_sweeps; ++t) {
    const auto started = std::chrono::steady_clock::now();
    eng.sweep(state);
    const double e = eng.elbo(state);
    model.sweep_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    const double prev = state.elbo_trace.back();
    state.elbo_trace.push_back(e);
    if (std::abs(e - prev) <= config.elbo_rel_tol * std::max(std::abs(prev), 1e-12)) break;
  }

  model.state = std::move(state);
  model.validate();
  return model;
}

void FittedModel::validate() const {
  for (std::size_t t = 1; t < state.elbo_trace.size(); ++t) {
    const double prev = state.elbo_trace[t - 1];
    if (state.elbo_trace[t] < prev - 1e-6 * std::abs(prev))
      throw NumericalError("elbo", "trace decreased at sweep " + std::to_string(t) + " (" +
                                       std::to_string(prev) + " -> " +
                                       std::to_string(state.elbo_trace[t]) + ")");
  }
}

}  // namespace cwkbmf
