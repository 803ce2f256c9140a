#pragma once

// Internal engine state shared by model.cpp, elbo.cpp and predict.cpp.

#include <vector>

#include "cwkbmf/model.hpp"

namespace cwkbmf {

// One side of the problem in its own orientation: y0 has this side's
// samples in rows (zeros where unobserved) and kk = sum_m K_m K_m.
struct SideProblem {
  std::vector<Matrix> kernels;
  Matrix kk;
  Matrix y0;
  std::vector<std::vector<Index>> missing_in_row;
};

struct Inference::Impl {
  ModelConfig cfg;
  SideProblem x, z;
  long n_obs = 0;
  double sum_y2_obs = 0.0;
  bool any_missing = false;
};

namespace detail {

// inverse of a symmetric positive definite matrix with escalating relative
// jitter (1e-10 .. 1e-6) before giving up
Matrix spd_inverse(const Matrix& prec, const char* factor);
double logdet_spd(const Matrix& m, const char* factor);
void check_finite(const Matrix& m, const char* factor);
double digamma(double x);

}  // namespace detail

}  // namespace cwkbmf
