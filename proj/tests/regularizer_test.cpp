// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "grad_check.hpp"
#include "regularizer/regularizer.hpp"
#include "small_models.hpp"

#include <gtest/gtest.h>

namespace autodrag {
namespace {

TEST(Regularizer, NonEditRowsPassThroughBitExact) {
  const RunConfig cfg = testing::small_run_config();
  const ToyGenerator g(cfg.generator);
  const RegularizerModel m(cfg.regularizer);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const LatentCode w = g.sample_latent(rng);
    const LatentCode out = regularize(m, w, g.edit_spec());
    EXPECT_TRUE(out.values.bottomRows(6) == w.values.bottomRows(6));
    EXPECT_FALSE(out.values.topRows(6) == w.values.topRows(6));
  }
}

TEST(Regularizer, BatchedMatchesSingle) {
  const RunConfig cfg = testing::small_run_config();
  const ToyGenerator g(cfg.generator);
  const RegularizerModel m(cfg.regularizer);
  Rng rng(5);
  const LatentCode a = g.sample_latent(rng), b = g.sample_latent(rng);
  ag::Tape t(false);
  const Matrix both = m.forward(t, t.constant(stack_latents({a, b})), 2).value();
  EXPECT_LT((both.bottomRows(12) - regularize(m, b, g.edit_spec()).values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Regularizer, GradientMatchesFiniteDifferences) {
  RegularizerConfig rc = testing::small_run_config().regularizer;
  const RegularizerModel m(rc);
  Rng rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(12, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const double err = testing::max_grad_error(x, [&](ag::Tape& t, const ag::Var& v) {
    const ag::Var y = m.forward(t, v, 1);
    return ag::sum(ag::mul(y, y));
  });
  EXPECT_LT(err, 1e-4);
}

TEST(Regularizer, LossIsMeanAbsoluteError) {
  const LatentCode a(Matrix::Zero(2, 3));
  Matrix b = Matrix::Zero(2, 3);
  b(0, 0) = 3.0;
  b(1, 2) = -3.0;
  EXPECT_DOUBLE_EQ(reg_loss(a, LatentCode(b)), 1.0);
  EXPECT_THROW(reg_loss(a, LatentCode(Matrix::Zero(3, 3))), ShapeError);
}

TEST(Regularizer, ShortTrainingStaysFinite) {
  const RunConfig cfg = testing::small_run_config();
  const ToyGenerator g(cfg.generator);
  RegularizerModel m(cfg.regularizer);
  Stage1Config s = cfg.stage1;
  s.epochs = 2;
  int calls = 0;
  const Stage1Result r = train_stage1(g, m, s, [&](int, double) { ++calls; });
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(r.epoch_loss.size(), 2u);
  for (double l : r.epoch_loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(Regularizer, ConfigValidation) {
  RegularizerConfig rc;
  rc.heads = 3;
  EXPECT_THROW(RegularizerModel{rc}, ParameterError);
}

}  // namespace
}  // namespace autodrag
