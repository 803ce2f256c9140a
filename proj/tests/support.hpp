#pragma once

// Shared fixtures and independent oracles for the test suite.  Everything
// here deliberately avoids the library's own numerics where it matters:
// oracles recompute quantities from their definitions so a bug in the
// implementation cannot hide in its own test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cwkbmf/kernels.hpp"
#include "cwkbmf/model.hpp"
#include "cwkbmf/rng.hpp"
#include "cwkbmf/synthetic.hpp"
#include "cwkbmf/types.hpp"

namespace testsupport {

using cwkbmf::BoolArray;
using cwkbmf::Index;
using cwkbmf::Matrix;
using cwkbmf::Vector;

// ---- random problem instances ----

struct Instance {
  cwkbmf::KernelSet kx, kz;
  cwkbmf::ResponseMatrix y;
};

inline Matrix random_normal(std::uint64_t seed, Index rows, Index cols) {
  cwkbmf::rng::Stream s(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = s.next_normal();
  return m;
}

// Gaussian kernels over random features on both sides and a noisy low-rank
// response with a few cells hidden.  Not the synthetic benchmark generator:
// this is the generic fixture for algebraic properties, where any
// well-conditioned instance will do.
inline Instance random_instance(Index n_x, Index n_z, Index p_x, Index p_z, int rank,
                                std::uint64_t seed, double missing = 0.05) {
  Instance inst;
  for (Index m = 0; m < p_x; ++m) {
    const auto key = cwkbmf::rng::substream(seed, "inst_x", static_cast<std::uint64_t>(m));
    inst.kx.kernels.push_back(cwkbmf::gaussian_kernel(random_normal(key, n_x, 5)));
    inst.kx.names.push_back("xview_" + std::to_string(m));
  }
  for (Index m = 0; m < p_z; ++m) {
    const auto key = cwkbmf::rng::substream(seed, "inst_z", static_cast<std::uint64_t>(m));
    inst.kz.kernels.push_back(cwkbmf::gaussian_kernel(random_normal(key, n_z, 5)));
    inst.kz.names.push_back("zview_" + std::to_string(m));
  }
  const Matrix u = random_normal(cwkbmf::rng::substream(seed, "inst_u"), n_x, rank);
  const Matrix v = random_normal(cwkbmf::rng::substream(seed, "inst_v"), n_z, rank);
  inst.y.values =
      u * v.transpose() + 0.5 * random_normal(cwkbmf::rng::substream(seed, "inst_e"), n_x, n_z);
  inst.y.mask.setConstant(n_x, n_z, true);
  cwkbmf::rng::Stream holes(cwkbmf::rng::substream(seed, "inst_mask"));
  const auto n_hide = static_cast<Index>(missing * static_cast<double>(n_x * n_z));
  for (Index k = 0; k < n_hide; ++k)
    inst.y.mask(static_cast<Index>(holes.next_below(static_cast<std::uint64_t>(n_x))),
                static_cast<Index>(holes.next_below(static_cast<std::uint64_t>(n_z)))) = false;
  for (Index i = 0; i < n_x; ++i) inst.y.row_ids.push_back("r" + std::to_string(i));
  for (Index j = 0; j < n_z; ++j) inst.y.col_ids.push_back("c" + std::to_string(j));
  return inst;
}

// ---- factor perturbation (local-optimality probes) ----

// Multiplies every entry by (1 + rel * u), u uniform on [-1, 1].
inline void jiggle(Matrix& m, double rel, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) *= 1.0 + rel * u(gen);
}

// Congruence T S T^T with T = I + rel * U keeps the matrix positive
// semi-definite while moving every direction, diagonal and off-diagonal.
inline void jiggle_cov(Matrix& s, double rel, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Index n = s.rows();
  Matrix t = Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t(i, j) += rel * u(gen);
  s = (t * s * t.transpose()).eval();
  s = 0.5 * (s + s.transpose()).eval();
}

// Randomly perturbs exactly the variational parameters owned by one factor
// block, staying inside the mean-field family (covariances stay PSD; in
// shared mode the tied weight columns move together).
inline void perturb_factor(cwkbmf::VariationalState& state, cwkbmf::Factor f, bool shared,
                           double rel, std::mt19937_64& gen) {
  using cwkbmf::Factor;
  cwkbmf::SideState& s = (f <= Factor::XH) ? state.x : state.z;
  switch (f) {
    case Factor::XLambda:
    case Factor::ZLambda:
      jiggle(s.lambda_shape, rel, gen);
      jiggle(s.lambda_scale, rel, gen);
      break;
    case Factor::XA:
    case Factor::ZA:
      jiggle(s.a_mean, rel, gen);
      for (auto& cov : s.a_cov) jiggle_cov(cov, rel, gen);
      break;
    case Factor::XG:
    case Factor::ZG:
      for (auto& gm : s.g_mean) jiggle(gm, rel, gen);
      jiggle(s.g_var, rel, gen);
      break;
    case Factor::XEta:
    case Factor::ZEta:
      jiggle(s.eta_shape, rel, gen);
      jiggle(s.eta_scale, rel, gen);
      break;
    case Factor::XE:
    case Factor::ZE:
      if (shared) {
        Matrix col = s.e_mean.col(0);
        jiggle(col, rel, gen);
        s.e_mean = col.replicate(1, s.e_mean.cols());
      } else {
        jiggle(s.e_mean, rel, gen);
      }
      for (auto& cov : s.e_cov) jiggle_cov(cov, rel, gen);
      break;
    case Factor::XH:
    case Factor::ZH:
      jiggle(s.h_mean, rel, gen);
      for (auto& cov : s.h_cov) jiggle_cov(cov, rel, gen);
      break;
  }
}

// ---- Monte-Carlo evidence bound (independent oracle) ----

// digamma by central difference of lgamma: plenty for entropy terms whose
// error budget is dwarfed by the Monte-Carlo standard error
inline double psi(double x) {
  const double h = 1e-6 * std::max(1.0, x);
  return (std::lgamma(x + h) - std::lgamma(x - h)) / (2.0 * h);
}

inline double log_gamma_pdf(double x, double shape, double scale) {
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
         shape * std::log(scale);
}

struct McElbo {
  double estimate = 0.0;  // MC mean of E_q[log joint] plus analytic entropy
  double se = 0.0;        // standard error of the MC part
};

namespace mcdetail {

constexpr double kLn2Pi = 1.8378770664093454836;

inline double entropy_gamma(double shape, double scale) {
  return shape + std::log(scale) + std::lgamma(shape) + (1.0 - shape) * psi(shape);
}

inline double entropy_mvn(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  double logdet = 0.0;
  for (Index i = 0; i < cov.rows(); ++i) logdet += std::log(std::max(es.eigenvalues()[i], 1e-300));
  return 0.5 * static_cast<double>(cov.rows()) * (1.0 + kLn2Pi) + 0.5 * logdet;
}

// symmetric square root via the eigendecomposition; robust to tiny negative
// round-off eigenvalues
inline Matrix cov_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

struct SideSample {
  Matrix lambda, a, eta, e, h;
  std::vector<Matrix> g;
};

struct SideSampler {
  const cwkbmf::SideState* s = nullptr;
  std::vector<Matrix> a_sqrt, e_sqrt, h_sqrt;

  explicit SideSampler(const cwkbmf::SideState& side) : s(&side) {
    for (const auto& cov : side.a_cov) a_sqrt.push_back(cov_sqrt(cov));
    for (const auto& cov : side.e_cov) e_sqrt.push_back(cov_sqrt(cov));
    for (const auto& cov : side.h_cov) h_sqrt.push_back(cov_sqrt(cov));
  }

  double entropy() const {
    double out = 0.0;
    for (Index i = 0; i < s->lambda_shape.rows(); ++i)
      for (Index c = 0; c < s->lambda_shape.cols(); ++c)
        out += entropy_gamma(s->lambda_shape(i, c), s->lambda_scale(i, c));
    for (Index m = 0; m < s->eta_shape.rows(); ++m)
      for (Index c = 0; c < s->eta_shape.cols(); ++c)
        out += entropy_gamma(s->eta_shape(m, c), s->eta_scale(m, c));
    for (const auto& cov : s->a_cov) out += entropy_mvn(cov);
    for (const auto& cov : s->e_cov) out += entropy_mvn(cov);
    for (const auto& cov : s->h_cov) out += entropy_mvn(cov);
    for (Index m = 0; m < s->p(); ++m)
      for (Index c = 0; c < s->r(); ++c)
        out += 0.5 * static_cast<double>(s->n()) * (1.0 + kLn2Pi + std::log(s->g_var(m, c)));
    return out;
  }

  SideSample draw(std::mt19937_64& gen) const {
    std::normal_distribution<double> z;
    const Index n = s->n(), r = s->r(), p = s->p();
    SideSample out;
    out.lambda.resize(n, r);
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < r; ++c)
        out.lambda(i, c) = std::gamma_distribution<double>(s->lambda_shape(i, c),
                                                           s->lambda_scale(i, c))(gen);
    out.a.resize(n, r);
    for (Index c = 0; c < r; ++c) {
      Vector zv(n);
      for (Index i = 0; i < n; ++i) zv[i] = z(gen);
      out.a.col(c) = s->a_mean.col(c) + a_sqrt[static_cast<std::size_t>(c)] * zv;
    }
    out.g.resize(static_cast<std::size_t>(p));
    for (Index m = 0; m < p; ++m) {
      Matrix gm(n, r);
      for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < r; ++c)
          gm(i, c) = s->g_mean[static_cast<std::size_t>(m)](i, c) +
                     std::sqrt(s->g_var(m, c)) * z(gen);
      out.g[static_cast<std::size_t>(m)] = std::move(gm);
    }
    out.eta.resize(s->eta_shape.rows(), s->eta_shape.cols());
    for (Index m = 0; m < out.eta.rows(); ++m)
      for (Index c = 0; c < out.eta.cols(); ++c)
        out.eta(m, c) =
            std::gamma_distribution<double>(s->eta_shape(m, c), s->eta_scale(m, c))(gen);
    out.e.resize(p, r);
    for (Index c = 0; c < r; ++c) {
      Vector zv(p);
      for (Index m = 0; m < p; ++m) zv[m] = z(gen);
      out.e.col(c) = s->e_mean.col(c) + e_sqrt[static_cast<std::size_t>(c)] * zv;
    }
    out.h.resize(n, r);
    for (Index i = 0; i < n; ++i) {
      Vector zv(r);
      for (Index c = 0; c < r; ++c) zv[c] = z(gen);
      out.h.row(i) =
          (s->h_mean.row(i).transpose() + h_sqrt[static_cast<std::size_t>(i)] * zv).transpose();
    }
    return out;
  }
};

inline double side_log_joint(const SideSample& smp, const std::vector<Matrix>& kernels,
                             const cwkbmf::Hyperparameters& hp) {
  double lp = 0.0;
  const Index n = smp.a.rows(), r = smp.a.cols();
  const auto p = static_cast<Index>(kernels.size());
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < r; ++c) {
      const double lam = smp.lambda(i, c);
      lp += log_gamma_pdf(lam, hp.alpha_lambda, hp.beta_lambda);
      lp += 0.5 * std::log(lam) - 0.5 * kLn2Pi - 0.5 * lam * smp.a(i, c) * smp.a(i, c);
    }
  const double sg2 = hp.sigma_g * hp.sigma_g;
  for (Index m = 0; m < p; ++m) {
    const Matrix mean = kernels[static_cast<std::size_t>(m)] * smp.a;
    lp += -0.5 * static_cast<double>(n * r) * (kLn2Pi + std::log(sg2)) -
          0.5 * (smp.g[static_cast<std::size_t>(m)] - mean).squaredNorm() / sg2;
  }
  for (Index m = 0; m < p; ++m)
    for (Index c = 0; c < r; ++c) {
      const double eta = smp.eta(m, c);
      lp += log_gamma_pdf(eta, hp.alpha_eta, hp.beta_eta);
      lp += 0.5 * std::log(eta) - 0.5 * kLn2Pi - 0.5 * eta * smp.e(m, c) * smp.e(m, c);
    }
  const double sh2 = hp.sigma_h * hp.sigma_h;
  Matrix hmean = Matrix::Zero(n, r);
  for (Index m = 0; m < p; ++m)
    hmean.array() += smp.g[static_cast<std::size_t>(m)].array().rowwise() * smp.e.row(m).array();
  lp += -0.5 * static_cast<double>(n * r) * (kLn2Pi + std::log(sh2)) -
        0.5 * (smp.h - hmean).squaredNorm() / sh2;
  return lp;
}

}  // namespace mcdetail

// Estimates the evidence bound of a componentwise-mode state by sampling
// every latent from q and averaging the log joint density, then adding the
// analytic entropy of q.  Nothing is shared with the production bound
// except the state itself.
inline McElbo mc_elbo_oracle(const cwkbmf::VariationalState& state,
                             const cwkbmf::Hyperparameters& hp, const cwkbmf::KernelSet& kx,
                             const cwkbmf::KernelSet& kz, const cwkbmf::ResponseMatrix& y,
                             int samples, std::uint64_t seed) {
  std::vector<Matrix> kxv, kzv;
  for (const auto& k : kx.kernels) kxv.push_back(k.values);
  for (const auto& k : kz.kernels) kzv.push_back(k.values);
  mcdetail::SideSampler sx(state.x), sz(state.z);
  std::mt19937_64 gen(seed);

  const double sy2 = hp.sigma_y * hp.sigma_y;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < samples; ++t) {
    const auto ax = sx.draw(gen);
    const auto az = sz.draw(gen);
    double lp = mcdetail::side_log_joint(ax, kxv, hp) + mcdetail::side_log_joint(az, kzv, hp);
    for (Index i = 0; i < y.rows(); ++i)
      for (Index j = 0; j < y.cols(); ++j) {
        if (!y.mask(i, j)) continue;
        const double d = y.values(i, j) - ax.h.row(i).dot(az.h.row(j));
        lp += -0.5 * (mcdetail::kLn2Pi + std::log(sy2)) - 0.5 * d * d / sy2;
      }
    sum += lp;
    sum2 += lp * lp;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  McElbo out;
  out.se = std::sqrt(var / n);
  out.estimate = mean + sx.entropy() + sz.entropy();
  return out;
}

// ---- brute-force Spearman (independent oracle) ----

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based positions
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman_bruteforce(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---- brute-force activity recovery (independent oracle) ----

// Enumerates component permutations in lexicographic order, scores total
// agreement over all views, keeps the first maximizer, then reports the
// per-category accuracies under it.
inline cwkbmf::RecoveryScores recovery_bruteforce(const cwkbmf::ActivityMask& truth,
                                                  const BoolArray& inferred) {
  const Index p = truth.p(), r = truth.r();
  std::vector<Index> perm(static_cast<std::size_t>(r)), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_total = -1.0;
  do {
    double total = 0.0;
    for (Index m = 0; m < p; ++m)
      for (Index s = 0; s < r; ++s)
        if (truth.activity(m, s) == inferred(m, perm[static_cast<std::size_t>(s)])) total += 1.0;
    if (total > best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  auto category_accuracy = [&](const std::vector<Index>& rows) {
    if (rows.empty()) return 1.0;
    double agree = 0.0;
    for (Index m : rows)
      for (Index s = 0; s < r; ++s)
        if (truth.activity(m, s) == inferred(m, best[static_cast<std::size_t>(s)])) agree += 1.0;
    return agree / (static_cast<double>(rows.size()) * static_cast<double>(r));
  };
  cwkbmf::RecoveryScores out;
  out.shared = category_accuracy(truth.shared_views());
  out.specific = category_accuracy(truth.specific_views());
  out.empty = category_accuracy(truth.empty_views());
  return out;
}

}  // namespace testsupport
