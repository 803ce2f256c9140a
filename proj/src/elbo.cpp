#include <cmath>
#include <numbers>

#include "cwkbmf/model.hpp"
#include "model_impl.hpp"

namespace cwkbmf {

namespace detail {

double digamma(double x) {
  // recurrence into the asymptotic regime, then the standard series
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return acc + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f / 132))));
}

}  // namespace detail

namespace {

using detail::digamma;
using detail::logdet_spd;

constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2 pi)

// E_q[ln Gamma(x; shape a0, scale b0)] + entropy of q = Gamma(a, b),
// summed over a whole block of gamma factors.
double gamma_block(const Matrix& shape, const Matrix& scale, double a0, double b0) {
  double out = 0.0;
  for (Index i = 0; i < shape.rows(); ++i)
    for (Index j = 0; j < shape.cols(); ++j) {
      const double a = shape(i, j);
      const double b = scale(i, j);
      const double e_ln = digamma(a) + std::log(b);
      const double e = a * b;
      out += (a0 - 1.0) * e_ln - e / b0 - std::lgamma(a0) - a0 * std::log(b0);
      out += a + std::log(b) + std::lgamma(a) + (1.0 - a) * digamma(a);
    }
  return out;
}

Matrix e_second_moment(const SideState& s, Index c, bool shared) {
  const auto& cov = s.e_cov[shared ? 0 : static_cast<std::size_t>(c)];
  return s.e_mean.col(c) * s.e_mean.col(c).transpose() + cov;
}

double side_elbo(const SideState& s, const SideProblem& prob, const Hyperparameters& hp,
                 bool shared) {
  const Index n = s.n();
  const Index r = s.r();
  const Index p = s.p();
  const double nn = static_cast<double>(n);
  double out = 0.0;

  // precision priors and their entropies
  out += gamma_block(s.lambda_shape, s.lambda_scale, hp.alpha_lambda, hp.beta_lambda);
  out += gamma_block(s.eta_shape, s.eta_scale, hp.alpha_eta, hp.beta_eta);

  // E[ln p(A | lambda)] and the entropy of q(A)
  for (Index c = 0; c < r; ++c) {
    const auto& cov = s.a_cov[static_cast<std::size_t>(c)];
    const Vector e_lambda =
        (s.lambda_shape.col(c).array() * s.lambda_scale.col(c).array()).matrix();
    const Vector a2 = s.a_mean.col(c).array().square().matrix() + cov.diagonal();
    for (Index i = 0; i < n; ++i)
      out += -0.5 * kLn2Pi +
             0.5 * (digamma(s.lambda_shape(i, c)) + std::log(s.lambda_scale(i, c))) -
             0.5 * e_lambda[i] * a2[i];
    out += 0.5 * nn * (1.0 + kLn2Pi) + 0.5 * logdet_spd(cov, "q(A) entropy");
  }

  // E[ln p(G | A, K)] and the entropy of q(G)
  const double sg2 = hp.sigma_g * hp.sigma_g;
  double g_quad = 0.0;
  for (Index m = 0; m < p; ++m) {
    const auto& gm = s.g_mean[static_cast<std::size_t>(m)];
    const Matrix ka = prob.kernels[static_cast<std::size_t>(m)] * s.a_mean;
    g_quad += gm.squaredNorm() + nn * s.g_var.row(m).sum();
    g_quad += -2.0 * gm.cwiseProduct(ka).sum() + ka.squaredNorm();
  }
  for (Index c = 0; c < r; ++c)
    g_quad += s.a_cov[static_cast<std::size_t>(c)].cwiseProduct(prob.kk).sum();
  out += -0.5 * nn * static_cast<double>(r * p) * (kLn2Pi + std::log(sg2)) -
         0.5 * g_quad / sg2;
  for (Index m = 0; m < p; ++m)
    for (Index c = 0; c < r; ++c)
      out += 0.5 * nn * (1.0 + kLn2Pi + std::log(s.g_var(m, c)));

  // E[ln p(e | eta)] and the entropy of q(e)
  if (shared) {
    const Matrix e2 = s.e_mean.col(0) * s.e_mean.col(0).transpose() + s.e_cov[0];
    for (Index m = 0; m < p; ++m)
      out += -0.5 * kLn2Pi +
             0.5 * (digamma(s.eta_shape(m, 0)) + std::log(s.eta_scale(m, 0))) -
             0.5 * s.eta_shape(m, 0) * s.eta_scale(m, 0) * e2(m, m);
    out += 0.5 * static_cast<double>(p) * (1.0 + kLn2Pi) +
           0.5 * logdet_spd(s.e_cov[0], "q(e) entropy");
  } else {
    for (Index c = 0; c < r; ++c) {
      const auto& cov = s.e_cov[static_cast<std::size_t>(c)];
      for (Index m = 0; m < p; ++m) {
        const double e2 = s.e_mean(m, c) * s.e_mean(m, c) + cov(m, m);
        out += -0.5 * kLn2Pi +
               0.5 * (digamma(s.eta_shape(m, c)) + std::log(s.eta_scale(m, c))) -
               0.5 * s.eta_shape(m, c) * s.eta_scale(m, c) * e2;
      }
      out += 0.5 * static_cast<double>(p) * (1.0 + kLn2Pi) +
             0.5 * logdet_spd(cov, "q(e) entropy");
    }
  }

  // E[ln p(H | e, G)] and the entropy of q(H)
  const double sh2 = hp.sigma_h * hp.sigma_h;
  Matrix w(n, p);
  double h_quad = 0.0;
  for (Index c = 0; c < r; ++c) {
    const Matrix e2 = e_second_moment(s, c, shared);
    for (Index m = 0; m < p; ++m) w.col(m) = s.g_mean[static_cast<std::size_t>(m)].col(c);
    double q1 = s.h_mean.col(c).squaredNorm();
    for (Index i = 0; i < n; ++i) q1 += s.h_cov[static_cast<std::size_t>(i)](c, c);
    const double q2 = -2.0 * s.h_mean.col(c).dot(w * s.e_mean.col(c));
    const double q3 = e2.cwiseProduct(w.transpose() * w).sum();
    const double q4 = nn * e2.diagonal().dot(s.g_var.col(c));
    h_quad += q1 + q2 + q3 + q4;
  }
  out += -0.5 * nn * static_cast<double>(r) * (kLn2Pi + std::log(sh2)) - 0.5 * h_quad / sh2;
  for (Index i = 0; i < n; ++i)
    out += 0.5 * static_cast<double>(r) * (1.0 + kLn2Pi) +
           0.5 * logdet_spd(s.h_cov[static_cast<std::size_t>(i)], "q(H) entropy");

  return out;
}

}  // namespace

double Inference::elbo(const VariationalState& state) const {
  const auto& hp = impl_->cfg.hyper;
  const bool shared = impl_->cfg.weight_mode == WeightMode::SharedAcrossComponents;

  double out = side_elbo(state.x, impl_->x, hp, shared);
  out += side_elbo(state.z, impl_->z, hp, shared);

  // E[ln p(Y | H_x, H_z)] over observed cells
  const double sy2 = hp.sigma_y * hp.sigma_y;
  const Index r = state.x.r();
  Matrix smx = state.x.h_mean.transpose() * state.x.h_mean;
  for (const auto& cov : state.x.h_cov) smx += cov;
  Matrix smz = state.z.h_mean.transpose() * state.z.h_mean;
  for (const auto& cov : state.z.h_cov) smz += cov;

  double quad = impl_->sum_y2_obs;
  quad += -2.0 * ((impl_->x.y0 * state.z.h_mean).cwiseProduct(state.x.h_mean)).sum();
  quad += smx.cwiseProduct(smz).sum();
  if (impl_->any_missing) {
    for (Index i = 0; i < state.x.h_mean.rows(); ++i) {
      const auto& missing = impl_->x.missing_in_row[static_cast<std::size_t>(i)];
      if (missing.empty()) continue;
      const Matrix m2x = state.x.h_mean.row(i).transpose() * state.x.h_mean.row(i) +
                         state.x.h_cov[static_cast<std::size_t>(i)];
      for (Index j : missing) {
        const Matrix m2z = state.z.h_mean.row(j).transpose() * state.z.h_mean.row(j) +
                           state.z.h_cov[static_cast<std::size_t>(j)];
        quad -= m2x.cwiseProduct(m2z).sum();
      }
    }
  }
  (void)r;
  out += -0.5 * static_cast<double>(impl_->n_obs) * (kLn2Pi + std::log(sy2)) - 0.5 * quad / sy2;

  if (!std::isfinite(out)) throw NumericalError("elbo", "evidence bound is not finite");
  return out;
}

namespace {

void validate_side(const SideState& s, const char* side) {
  const std::string tag(side);
  auto positive = [&](const Matrix& m, const char* what) {
    if (!(m.minCoeff() > 0.0) || !m.allFinite())
      throw NumericalError(tag + "." + what, "entries must be positive and finite");
  };
  positive(s.lambda_shape, "lambda.shape");
  positive(s.lambda_scale, "lambda.scale");
  positive(s.eta_shape, "eta.shape");
  positive(s.eta_scale, "eta.scale");
  positive(s.g_var, "G.var");
  if (!s.a_mean.allFinite() || !s.e_mean.allFinite() || !s.h_mean.allFinite())
    throw NumericalError(tag, "non-finite mean block");
  auto check_cov = [&](const Matrix& cov, const char* what) {
    if (!cov.allFinite()) throw NumericalError(tag + "." + what, "non-finite covariance");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8)
      throw NumericalError(tag + "." + what, "covariance asymmetry above 1e-8");
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    const double floor = -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < floor)
      throw NumericalError(tag + "." + what, "covariance is not positive semi-definite");
  };
  for (const auto& cov : s.a_cov) check_cov(cov, "A.cov");
  for (const auto& cov : s.e_cov) check_cov(cov, "e.cov");
  for (const auto& cov : s.h_cov) check_cov(cov, "H.cov");
  for (const auto& gm : s.g_mean)
    if (!gm.allFinite()) throw NumericalError(tag + ".G", "non-finite mean block");
}

}  // namespace

void VariationalState::validate() const {
  validate_side(x, "x");
  validate_side(z, "z");
  for (double e : elbo_trace)
    if (!std::isfinite(e)) throw NumericalError("elbo", "non-finite trace entry");
}

}  // namespace cwkbmf
