#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "cwkbmf/model.hpp"
#include "cwkbmf/rng.hpp"
#include "support.hpp"

using namespace cwkbmf;
using testsupport::Instance;
using testsupport::random_instance;

TEST_CASE("initialization is deterministic and honors the documented contract") {
  const Instance inst = random_instance(12, 9, 3, 1, 2, 101);
  ModelConfig cfg;
  cfg.components = 3;
  cfg.seed = 7;
  Inference eng(cfg, inst.kx, inst.kz, inst.y);
  const VariationalState st = eng.initialize();
  st.validate();

  const VariationalState st2 = Inference(cfg, inst.kx, inst.kz, inst.y).initialize();
  CHECK(st.x.a_mean == st2.x.a_mean);
  CHECK(st.x.h_mean == st2.x.h_mean);
  CHECK(st.z.e_mean == st2.z.e_mean);

  ModelConfig other = cfg;
  other.seed = 8;
  const VariationalState st3 = Inference(other, inst.kx, inst.kz, inst.y).initialize();
  CHECK(st.x.a_mean != st3.x.a_mean);

  // gamma blocks at the prior, unit weights, prior covariances
  CHECK((st.x.lambda_shape.array() == cfg.hyper.alpha_lambda).all());
  CHECK((st.x.lambda_scale.array() == cfg.hyper.beta_lambda).all());
  CHECK((st.z.eta_shape.array() == cfg.hyper.alpha_eta).all());
  CHECK((st.x.e_mean.array() == 1.0).all());
  CHECK((st.x.g_var.array() == 1.0).all());
  for (const auto& cov : st.x.a_cov)
    CHECK((cov - Matrix::Identity(12, 12) / (cfg.hyper.alpha_lambda * cfg.hyper.beta_lambda))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  for (const auto& cov : st.x.h_cov)
    CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  // projections start at the kernel image of the random weights
  for (std::size_t m = 0; m < inst.kx.size(); ++m)
    CHECK((st.x.g_mean[m] - inst.kx.kernels[m].values * st.x.a_mean).cwiseAbs().maxCoeff() <
          1e-12);

  // the factor means start on the response's leading singular structure:
  // their product reproduces the best rank-R approximation of the
  // zero-filled response
  const Matrix y0 = inst.y.mask.select(inst.y.values, Matrix::Zero(12, 9));
  Eigen::BDCSVD<Matrix> svd(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix rank_r = svd.matrixU().leftCols(3) *
                        svd.singularValues().head(3).asDiagonal() *
                        svd.matrixV().leftCols(3).transpose();
  CHECK((st.x.h_mean * st.z.h_mean.transpose() - rank_r).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("the bound never decreases across sweeps or within one") {
  for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const Instance inst = random_instance(20, 15, 3, 1, 2, seed);
    ModelConfig cfg;
    cfg.components = 2;
    cfg.seed = seed;
    Inference eng(cfg, inst.kx, inst.kz, inst.y);
    VariationalState st = eng.initialize();
    double prev = eng.elbo(st);
    for (int sweep = 0; sweep < 10; ++sweep) {
      for (Factor f : sweep_order()) {
        eng.update_factor(st, f);
        const double cur = eng.elbo(st);
        // each exact coordinate update can only raise the bound
        CHECK(cur >= prev - 1e-9 * std::abs(prev) - 1e-9);
        prev = cur;
      }
      ++st.sweep_count;
    }
    st.validate();
  }
}

TEST_CASE("factor updates are idempotent when they do not read their own block") {
  const Instance inst = random_instance(14, 10, 3, 1, 2, 31);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.seed = 3;
  Inference eng(cfg, inst.kx, inst.kz, inst.y);
  VariationalState st = eng.initialize();
  for (int sweep = 0; sweep < 3; ++sweep) eng.sweep(st);

  for (Factor f : sweep_order()) {
    // G is excluded: its per-kernel blocks update sequentially, so a second
    // pass keeps refining them against each other
    if (f == Factor::XG || f == Factor::ZG) {
      eng.update_factor(st, f);
      continue;
    }
    eng.update_factor(st, f);
    VariationalState once = st;
    eng.update_factor(st, f);
    CHECK((st.x.h_mean - once.x.h_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.x.a_mean - once.x.a_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.x.e_mean - once.x.e_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.x.lambda_scale - once.x.lambda_scale).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.z.h_mean - once.z.h_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.z.e_mean - once.z.e_mean).cwiseAbs().maxCoeff() < 1e-12);
  }

  // with a single kernel the G cross-terms vanish and G becomes idempotent too
  const Instance solo = random_instance(12, 8, 1, 1, 2, 32);
  Inference eng1(cfg, solo.kx, solo.kz, solo.y);
  VariationalState st1 = eng1.initialize();
  for (int sweep = 0; sweep < 3; ++sweep) eng1.sweep(st1);
  eng1.update_factor(st1, Factor::XG);
  const Matrix g_once = st1.x.g_mean[0];
  eng1.update_factor(st1, Factor::XG);
  CHECK((st1.x.g_mean[0] - g_once).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("every update lands on a local maximum of the bound") {
  const Instance inst = random_instance(10, 8, 2, 1, 2, 41);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.seed = 5;
  Inference eng(cfg, inst.kx, inst.kz, inst.y);
  VariationalState st = eng.initialize();
  for (int sweep = 0; sweep < 3; ++sweep) eng.sweep(st);

  std::mt19937_64 gen(99);
  for (Factor f : sweep_order()) {
    eng.update_factor(st, f);
    const double at_optimum = eng.elbo(st);
    for (int trial = 0; trial < 20; ++trial) {
      VariationalState probe = st;
      testsupport::perturb_factor(probe, f, false, 1e-3, gen);
      CHECK(eng.elbo(probe) <= at_optimum + 1e-8);
    }
  }
}

TEST_CASE("analytic bound agrees with a Monte-Carlo estimate of it") {
  const Instance inst = random_instance(4, 3, 1, 1, 1, 55, 0.1);
  ModelConfig cfg;
  cfg.components = 1;
  cfg.seed = 9;
  Inference eng(cfg, inst.kx, inst.kz, inst.y);
  VariationalState st = eng.initialize();

  // once at the raw initialization and once mid-optimization, where the
  // covariances are no longer trivially shaped
  auto agree = [&](const VariationalState& state, std::uint64_t seed) {
    const double analytic = eng.elbo(state);
    const auto mc =
        testsupport::mc_elbo_oracle(state, cfg.hyper, inst.kx, inst.kz, inst.y, 30000, seed);
    INFO("analytic " << analytic << " mc " << mc.estimate << " se " << mc.se);
    CHECK(std::abs(analytic - mc.estimate) <= 4.0 * mc.se);
  };
  agree(st, 1001);
  for (int sweep = 0; sweep < 20; ++sweep) eng.sweep(st);
  agree(st, 1002);
}

TEST_CASE("with one component the two weight modes coincide") {
  const Instance inst = random_instance(18, 12, 3, 2, 1, 61);
  ModelConfig cw;
  cw.components = 1;
  cw.seed = 4;
  cw.max_sweeps = 40;
  cw.elbo_rel_tol = 0.0;
  ModelConfig sh = cw;
  sh.weight_mode = WeightMode::SharedAcrossComponents;

  const FittedModel a = fit(cw, inst.kx, inst.kz, inst.y);
  const FittedModel b = fit(sh, inst.kx, inst.kz, inst.y);
  REQUIRE(a.state.elbo_trace.size() == b.state.elbo_trace.size());
  for (std::size_t t = 0; t < a.state.elbo_trace.size(); ++t)
    CHECK(a.state.elbo_trace[t] ==
          doctest::Approx(b.state.elbo_trace[t]).epsilon(1e-9));
  CHECK((a.state.x.h_mean - b.state.x.h_mean).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("shared mode keeps its weight columns tied") {
  const Instance inst = random_instance(16, 10, 3, 1, 2, 71);
  ModelConfig cfg;
  cfg.components = 3;
  cfg.weight_mode = WeightMode::SharedAcrossComponents;
  cfg.max_sweeps = 15;
  const FittedModel m = fit(cfg, inst.kx, inst.kz, inst.y);
  for (Index c = 1; c < 3; ++c) {
    CHECK((m.state.x.e_mean.col(c) - m.state.x.e_mean.col(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.state.z.e_mean.col(c) - m.state.z.e_mean.col(0)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(m.state.x.e_cov.size() == 1);
  CHECK(m.state.x.eta_shape.cols() == 1);
}

TEST_CASE("fitting is bit-for-bit reproducible") {
  const Instance inst = random_instance(15, 11, 2, 1, 2, 81);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.seed = 17;
  cfg.max_sweeps = 25;
  const FittedModel a = fit(cfg, inst.kx, inst.kz, inst.y);
  const FittedModel b = fit(cfg, inst.kx, inst.kz, inst.y);
  CHECK(a.state.elbo_trace == b.state.elbo_trace);
  CHECK(a.state.x.h_mean == b.state.x.h_mean);
  CHECK(a.state.z.h_mean == b.state.z.h_mean);
  CHECK(a.state.x.e_mean == b.state.x.e_mean);
  CHECK(a.state.sweep_count == b.state.sweep_count);
}

TEST_CASE("fit handles constant and sparse columns and reports its trace") {
  Instance inst = random_instance(12, 6, 2, 1, 2, 91, 0.0);
  inst.y.values.col(2).setConstant(3.5);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.max_sweeps = 8;
  const FittedModel m = fit(cfg, inst.kx, inst.kz, inst.y);
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("'c2'") != std::string::npos);
  CHECK(m.col_std[2] == 1.0);
  CHECK(m.col_mean[2] == 3.5);
  CHECK(static_cast<int>(m.state.elbo_trace.size()) == m.state.sweep_count + 1);
  m.validate();
  m.state.validate();

  // stopping: a loose tolerance must cut the sweep budget short
  ModelConfig loose = cfg;
  loose.max_sweeps = 200;
  loose.elbo_rel_tol = 1e-2;
  const FittedModel early = fit(loose, inst.kx, inst.kz, inst.y);
  CHECK(early.state.sweep_count < 200);
}

TEST_CASE("in-matrix predictions undo the column normalization") {
  const Instance inst = random_instance(10, 7, 2, 1, 2, 95);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.max_sweeps = 10;
  const FittedModel m = fit(cfg, inst.kx, inst.kz, inst.y);
  const Matrix pred = m.predict_in_matrix();
  const Matrix raw = m.state.x.h_mean * m.state.z.h_mean.transpose();
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 7; ++j)
      CHECK(pred(i, j) ==
            doctest::Approx(m.col_mean[j] + m.col_std[j] * raw(i, j)).epsilon(1e-12));
}

TEST_CASE("new-row predictions match the projection formula on training columns") {
  const Instance inst = random_instance(12, 8, 3, 1, 2, 97);
  ModelConfig cfg;
  cfg.components = 2;
  cfg.max_sweeps = 12;
  const FittedModel m = fit(cfg, inst.kx, inst.kz, inst.y);

  const std::vector<Index> picks = {0, 5, 11};
  std::vector<Kernel> cross;
  for (std::size_t v = 0; v < inst.kx.size(); ++v) {
    Kernel k;
    k.width = inst.kx.kernels[v].width;
    k.values.resize(12, static_cast<Index>(picks.size()));
    for (std::size_t t = 0; t < picks.size(); ++t)
      k.values.col(static_cast<Index>(t)) = inst.kx.kernels[v].values.col(picks[t]);
    cross.push_back(std::move(k));
  }
  const Matrix pred = m.predict_new_rows(cross);
  REQUIRE(pred.rows() == 3);
  REQUIRE(pred.cols() == 8);

  // recompute sum_m e_m (A^T k_m) entry by entry, then the de-normalized
  // inner product with the drug factors
  for (std::size_t t = 0; t < picks.size(); ++t) {
    for (Index j = 0; j < 8; ++j) {
      double dot = 0.0;
      for (Index s = 0; s < 2; ++s) {
        double h = 0.0;
        for (std::size_t v = 0; v < inst.kx.size(); ++v) {
          double proj = 0.0;
          for (Index i = 0; i < 12; ++i)
            proj += m.state.x.a_mean(i, s) * inst.kx.kernels[v].values(i, picks[t]);
          h += m.state.x.e_mean(static_cast<Index>(v), s) * proj;
        }
        dot += h * m.state.z.h_mean(j, s);
      }
      const double expected = m.col_mean[j] + m.col_std[j] * dot;
      CHECK(pred(static_cast<Index>(t), j) == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  CHECK_THROWS_AS(m.predict_new_rows({cross[0]}), DimensionError);
}

TEST_CASE("shape and sanity violations are rejected up front") {
  const Instance inst = random_instance(10, 7, 2, 1, 2, 99);
  ModelConfig cfg;

  Instance wrong = inst;
  wrong.kz.kernels[0].values = Matrix::Identity(6, 6);  // response has 7 columns
  CHECK_THROWS_AS(Inference(cfg, wrong.kx, wrong.kz, wrong.y), DimensionError);

  Instance indefinite = inst;
  indefinite.kx.kernels[0].values(0, 1) = 5.0;  // wildly asymmetric / non-psd
  indefinite.kx.kernels[0].values(1, 0) = 5.0;
  CHECK_THROWS_AS(Inference(cfg, indefinite.kx, indefinite.kz, indefinite.y), DimensionError);

  ModelConfig bad = cfg;
  bad.hyper.sigma_y = 0.0;
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad = cfg;
  bad.components = 0;
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}
