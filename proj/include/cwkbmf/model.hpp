#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cwkbmf/types.hpp"

namespace cwkbmf {

// Bayesian matrix factorization of a response matrix Y (N_x samples by
// N_z targets) where both factor matrices are regressed onto multiple
// kernels.  Generative model for the sample side (target side mirrors it):
//
//   lambda_{is}  ~ Gamma(alpha_lambda, beta_lambda)          (shape, scale)
//   a_{is}       ~ N(0, 1 / lambda_{is})                     A is N x R
//   g_{mis}      ~ N(a_s . k_{mi}, sigma_g^2)                per kernel m
//   eta_{ms}     ~ Gamma(alpha_eta, beta_eta)
//   e_{ms}       ~ N(0, 1 / eta_{ms})                        kernel weights
//   h_{is}       ~ N(sum_m e_{ms} g_{mis}, sigma_h^2)        H is N x R
//   y_{ij}       ~ N(h_{x,i} . h_{z,j}, sigma_y^2)           observed cells
//
// In ComponentWise mode every component s carries its own weight column
// e_{.s}; SharedAcrossComponents ties e_{ms} = e_m (one weight per kernel,
// the classic ablation).  Inference is coordinate-ascent variational Bayes
// on the fully conjugate mean-field family
//   q = q(Lambda) q(A) q(G) q(eta) q(e) q(H)  per side,
// with per-column N x N covariances for A, per-component P x P covariances
// for e, per-row R x R covariances for H and per-(kernel, component)
// scalar variances for G (the exact optimum of that block is diagonal).

struct Hyperparameters {
  double alpha_lambda = 1.0;
  double beta_lambda = 1.0;
  double alpha_eta = 1.0;
  double beta_eta = 1.0;
  double sigma_g = 0.1;
  double sigma_h = 0.1;
  double sigma_y = 1.0;

  void validate() const;
};

enum class WeightMode { ComponentWise, SharedAcrossComponents };

struct ModelConfig {
  int components = 3;  // R
  WeightMode weight_mode = WeightMode::ComponentWise;
  Hyperparameters hyper;
  int max_sweeps = 200;
  double elbo_rel_tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

// Variational posterior for one side.  Shapes (N samples, R components,
// P kernels):
//   lambda: gamma shape/scale per (i, s)            N x R
//   A:      mean N x R, one N x N covariance per s
//   G:      mean N x R per kernel, scalar variance per (m, s)
//   eta:    gamma shape/scale per (m, s); P x 1 in shared mode
//   e:      mean P x R (columns identical in shared mode),
//           P x P covariance per s (a single one in shared mode)
//   H:      mean N x R, one R x R covariance per i
struct SideState {
  Matrix lambda_shape, lambda_scale;
  Matrix a_mean;
  std::vector<Matrix> a_cov;
  std::vector<Matrix> g_mean;
  Matrix g_var;
  Matrix eta_shape, eta_scale;
  Matrix e_mean;
  std::vector<Matrix> e_cov;
  Matrix h_mean;
  std::vector<Matrix> h_cov;

  Index n() const { return h_mean.rows(); }
  Index r() const { return h_mean.cols(); }
  Index p() const { return static_cast<Index>(g_mean.size()); }
};

struct VariationalState {
  SideState x, z;
  std::vector<double> elbo_trace;
  int sweep_count = 0;

  // gamma parameters strictly positive, covariances symmetric PSD within
  // tolerance, everything finite
  void validate() const;
};

// One coordinate block; updates run in this order within a sweep.
enum class Factor {
  XLambda,
  XA,
  XG,
  XEta,
  XE,
  XH,
  ZLambda,
  ZA,
  ZG,
  ZEta,
  ZE,
  ZH,
};
const char* factor_name(Factor f);
std::vector<Factor> sweep_order();

// Engine bound to one problem instance.  Y is used exactly as given; see
// fit() for the column normalization applied to raw responses.
class Inference {
 public:
  Inference(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
            const ResponseMatrix& y);
  ~Inference();
  Inference(const Inference&) = delete;
  Inference& operator=(const Inference&) = delete;

  // Deterministic given config.seed: gamma blocks start at the prior,
  // E[A] is standard normal keyed by (seed, side, i, s), E[G_m] = K_m E[A],
  // E[e] = 1.  E[H] is seeded from the leading singular vectors of the
  // zero-filled response (scaled by sqrt of the singular values) so both
  // sides start aligned on the same components; columns past the response
  // rank fall back to sum_m E[G_m].  A and e covariances start at the
  // prior; G and H variances start at one, not at sigma^2, so that no
  // component is effectively pinned before its first update.
  VariationalState initialize() const;

  // Exact conjugate update of one factor given all others.
  void update_factor(VariationalState& state, Factor f) const;
  // One full sweep (x side then z side); appends nothing to the trace.
  void sweep(VariationalState& state) const;

  // Evidence lower bound of an arbitrary valid state.
  double elbo(const VariationalState& state) const;

  const ModelConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience wrappers constructing a throwaway engine.
VariationalState initialize(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
                            const ResponseMatrix& y);
VariationalState update_sweep(const VariationalState& state, const ModelConfig& config,
                              const KernelSet& kx, const KernelSet& kz, const ResponseMatrix& y);
double elbo(const VariationalState& state, const ModelConfig& config, const KernelSet& kx,
            const KernelSet& kz, const ResponseMatrix& y);

struct KernelWeights {
  Matrix means_x, zscores_x;  // P_x x R
  Matrix means_z, zscores_z;  // P_z x R
};

enum class ZScoreMode {
  PriorSd,    // |E[e]| / prior sd of e at the prior mean precision
  Empirical,  // |E[e]| / root-mean-square of all weight means on that side
};

struct FittedModel {
  ModelConfig config;
  VariationalState state;
  KernelSet kernels_x, kernels_z;
  std::vector<std::string> row_ids, col_ids;

  // per-column response normalization applied before fitting
  Vector col_mean, col_std;
  std::vector<std::string> warnings;

  // wall-clock seconds per sweep; diagnostic only, never serialized
  std::vector<double> sweep_seconds;

  // E[H_x] E[H_z]^T mapped back through the column normalization; defined
  // at observed and missing cells alike
  Matrix predict_in_matrix() const;

  // Predictions for out-of-sample rows given one cross kernel per x view
  // (training samples x new samples):  h_new = sum_m E[e_m] * (E[A]^T k_m)
  // row by row, then h_new E[H_z]^T, de-normalized per column.
  Matrix predict_new_rows(const std::vector<Kernel>& cross_kernels) const;

  KernelWeights posterior_kernel_weights(ZScoreMode mode = ZScoreMode::PriorSd) const;

  // elbo trace must be non-decreasing within 1e-6 relative slack
  void validate() const;
};

// Normalizes each response column to zero mean and unit variance over its
// observed entries (constant columns get std 1 plus a warning), runs
// coordinate ascent from initialize() until max_sweeps or the relative
// ELBO improvement falls below elbo_rel_tol.
FittedModel fit(const ModelConfig& config, const KernelSet& kx, const KernelSet& kz,
                const ResponseMatrix& y);

}  // namespace cwkbmf
