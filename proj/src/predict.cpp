#include <cmath>

#include "cwkbmf/model.hpp"

namespace cwkbmf {

namespace {

Matrix denormalize(Matrix pred, const Vector& col_mean, const Vector& col_std) {
  pred.array().rowwise() *= col_std.transpose().array();
  pred.rowwise() += col_mean.transpose();
  return pred;
}

}  // namespace

Matrix FittedModel::predict_in_matrix() const {
  return denormalize(state.x.h_mean * state.z.h_mean.transpose(), col_mean, col_std);
}

Matrix FittedModel::predict_new_rows(const std::vector<Kernel>& cross_kernels) const {
  const Index p = state.x.p();
  if (static_cast<Index>(cross_kernels.size()) != p)
    throw DimensionError("predict_new_rows: expected " + std::to_string(p) +
                         " cross kernels, got " + std::to_string(cross_kernels.size()));
  const Index n_train = state.x.n();
  const Index n_new = cross_kernels.front().cols();
  const Index r = state.x.r();

  Matrix h_new = Matrix::Zero(n_new, r);
  for (Index m = 0; m < p; ++m) {
    const auto& k = cross_kernels[static_cast<std::size_t>(m)];
    if (k.rows() != n_train)
      throw DimensionError("predict_new_rows: cross kernel rows must equal training samples");
    if (k.cols() != n_new)
      throw DimensionError("predict_new_rows: cross kernels disagree on new sample count");
    // g_new = E[A]^T k, weighted per component by E[e_m]
    const Matrix g_new = k.values.transpose() * state.x.a_mean;
    h_new.array() += g_new.array().rowwise() * state.x.e_mean.row(m).array();
  }
  return denormalize(h_new * state.z.h_mean.transpose(), col_mean, col_std);
}

namespace {

Matrix zscores_for(const Matrix& means, const Hyperparameters& hp, ZScoreMode mode) {
  if (mode == ZScoreMode::PriorSd) {
    // prior sd of a weight at the prior mean precision E[eta]
    const double prior_sd = 1.0 / std::sqrt(hp.alpha_eta * hp.beta_eta);
    return means.cwiseAbs() / prior_sd;
  }
  const double rms = std::sqrt(means.squaredNorm() /
                               static_cast<double>(means.rows() * means.cols()));
  return means.cwiseAbs() / (rms > 0.0 ? rms : 1.0);
}

}  // namespace

KernelWeights FittedModel::posterior_kernel_weights(ZScoreMode mode) const {
  KernelWeights w;
  w.means_x = state.x.e_mean;
  w.means_z = state.z.e_mean;
  w.zscores_x = zscores_for(w.means_x, config.hyper, mode);
  w.zscores_z = zscores_for(w.means_z, config.hyper, mode);
  return w;
}

}  // namespace cwkbmf
