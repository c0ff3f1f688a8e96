// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "predictor/predictor.hpp"
#include "small_models.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace autodrag {
namespace {

struct Fixture {
  RunConfig cfg = testing::small_run_config();
  ToyGenerator gen{cfg.generator};
  RegularizerModel reg{cfg.regularizer};
  PredictorModel pred{cfg.predictor};

  LatentSequence sequence(std::uint64_t seed, int n = 5) const {
    Rng rng(seed);
    const LatentCode w0 = gen.sample_latent(rng);
    const LatentCode anchor = gen.sample_latent(rng);
    return motion_from_anchor(w0, anchor, 0.05, n, gen.edit_spec());
  }
};

TEST(Predictor, DecoderIsCausal) {
  Fixture f;
  const LatentSequence seq = f.sequence(1);
  const FeatureMap feat = f.gen.features(seq[0]);
  const std::vector<PointPair> pairs = match_points(f.gen, seq[0], seq.back(), 0.0);
  std::vector<LatentCode> prefix(seq.codes.begin(), seq.codes.end() - 1);
  const auto base = predict_teacher_forced(f.pred, &f.reg, prefix, feat, pairs);
  for (std::size_t change = 1; change < prefix.size(); ++change) {
    std::vector<LatentCode> edited = prefix;
    edited[change].values.topRows(6).array() += 0.7;
    const auto out = predict_teacher_forced(f.pred, &f.reg, edited, feat, pairs);
    for (std::size_t i = 0; i < change; ++i) EXPECT_TRUE(out[i].values == base[i].values) << change << " " << i;
    EXPECT_FALSE(out[change].values == base[change].values);
  }
}

TEST(Predictor, NonEditRowsCopiedFromFirstCode) {
  Fixture f;
  const LatentSequence seq = f.sequence(2);
  const FeatureMap feat = f.gen.features(seq[0]);
  std::vector<LatentCode> prefix(seq.codes.begin(), seq.codes.end() - 1);
  for (const RegularizerModel* r : {static_cast<const RegularizerModel*>(&f.reg),
                                    static_cast<const RegularizerModel*>(nullptr)}) {
    for (const LatentCode& w : predict_teacher_forced(f.pred, r, prefix, feat, {{{30, 30}, {34, 30}}})) {
      EXPECT_TRUE(w.values.bottomRows(6) == seq[0].values.bottomRows(6));
    }
  }
  EXPECT_NEAR(f.pred.skip_weight(), 1.0 / (1.0 + std::exp(2.0)), 1e-12);
}

TEST(Predictor, BatchedPredictionMatchesSingle) {
  Fixture f;
  const LatentSequence a = f.sequence(3, 3), b = f.sequence(4, 3);
  const FeatureMap fa = f.gen.features(a[0]), fb = f.gen.features(b[0]);
  const std::vector<PointPair> pa{{{20, 20}, {25, 22}}}, pb{{{30, 40}, {28, 35}}, {{31, 41}, {29, 36}}};
  ag::Tape t(false);
  const Memory mem = f.pred.encode(t, {ContextInput{&fa, pa}, ContextInput{&fb, pb}});
  std::vector<LatentCode> prefix(a.codes.begin(), a.codes.end() - 1);
  prefix.insert(prefix.end(), b.codes.begin(), b.codes.end() - 1);
  const Matrix both = f.pred.predict(t, mem, t.constant(stack_latents(prefix)), 2, 3, &f.reg).value();
  const auto single = predict_teacher_forced(f.pred, &f.reg, {b.codes.begin(), b.codes.end() - 1}, fb, pb);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((both.middleRows((3 + i) * 12, 12) - single[static_cast<std::size_t>(i)].values).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(Predictor, EncodeCapsPairs) {
  Fixture f;
  const LatentSequence seq = f.sequence(5);
  const FeatureMap feat = f.gen.features(seq[0]);
  std::vector<PointPair> many;
  for (int i = 0; i < 40; ++i) many.push_back({{20.0 + i % 5, 20.0 + i / 5}, {25.0, 25.0}});
  const Matrix m = encode_context(f.pred, feat, many);
  EXPECT_EQ(m.rows(), f.cfg.predictor.conv_tokens() + 2 * f.cfg.predictor.max_pairs);
  EXPECT_THROW(encode_context(f.pred, feat, {}), ParameterError);
}

TEST(Predictor, PredLossMatchesDefinition) {
  Fixture f;
  const LatentSequence seq = f.sequence(6, 2);
  EXPECT_DOUBLE_EQ(pred_loss(seq.codes, seq), 0.0);
  std::vector<LatentCode> off = seq.codes;
  off[1].values.array() += 0.3;
  // one of the three codes is off by 0.3 everywhere
  EXPECT_NEAR(pred_loss(off, seq), 0.1, 1e-12);
  ag::Tape t;
  const ag::Var v = pred_loss(t, t.constant(stack_latents({off[1], off[2]})), seq);
  EXPECT_NEAR(v.value()(0, 0), 0.1, 1e-12);
}

TEST(Predictor, TotalLossCombination) {
  EXPECT_DOUBLE_EQ(total_loss(2.0, 3.0, 0.1, 1.0), 0.2 + 3.0);
  ag::Tape t;
  const ag::Var v = total_loss(t.constant(Matrix::Constant(1, 1, 2.0)), t.constant(Matrix::Constant(1, 1, 3.0)), 0.1, 1.0);
  EXPECT_DOUBLE_EQ(v.value()(0, 0), 3.2);
}

TEST(Predictor, DragMatchesRespectMinimumDistance) {
  Fixture f;
  const LatentSequence seq = f.sequence(7);
  const OracleMatcher m(f.gen, 1.0);
  const auto steps = drag_matches(m, seq, 0.5, 8);
  ASSERT_EQ(steps.size(), 5u);
  for (const auto& s : steps) {
    EXPECT_LE(s.size(), 8u);
    for (const PointPair& p : s) EXPECT_GT(p.distance(), 0.5);
  }
}

TEST(Predictor, TotalLossGradientOnTenEntries) {
  Fixture f;
  const LatentSequence seq = f.sequence(8);
  const OracleMatcher m(f.gen, 1.0);
  const auto steps = drag_matches(m, seq, 0.5, 8);
  Rng rng(9);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<LatentCode> guess(seq.codes.begin() + 1, seq.codes.end());
  Matrix x = stack_latents(guess);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += noise(rng);
  auto loss = [&](ag::Tape& t, const ag::Var& v) {
    return total_loss(pred_loss(t, v, seq), drag_loss(t, f.gen, v, seq, steps), 0.1, 1.0);
  };
  ag::Parameter p("x", x);
  {
    ag::Tape t;
    t.backward(loss(t, t.param(p)));
  }
  std::uniform_int_distribution<Eigen::Index> pick(0, 6 * 64 - 1);
  for (int k = 0; k < 10; ++k) {
    // edit-layer entries of a random step
    const Eigen::Index step = k % 5, idx = pick(rng);
    const Eigen::Index r = step * 12 + idx / 64, c = idx % 64;
    const double h = 1e-6;
    auto at = [&](double d) {
      Matrix y = x;
      y(r, c) += d;
      ag::Tape t(false);
      return loss(t, t.constant(y)).value()(0, 0);
    };
    const double fd = (at(h) - at(-h)) / (2 * h);
    const double an = p.grad(r, c);
    EXPECT_LT(std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an)), 1e-3) << r << "," << c;
  }
}

TEST(Predictor, ShortJointTrainingRuns) {
  Fixture f;
  Stage2Config s = f.cfg.stage2;
  s.epochs = 2;
  int epochs = 0;
  const Stage2Result r = train_stage2(f.gen, f.pred, f.reg, s, [&](const Stage2Epoch& e) {
    ++epochs;
    EXPECT_TRUE(std::isfinite(e.total));
    EXPECT_NEAR(e.total, 0.1 * e.l_pred + e.l_drag, 1e-9);
  });
  EXPECT_EQ(epochs, 2);
  EXPECT_EQ(r.curve.size(), 2u);
}

TEST(Predictor, ConfigGuards) {
  Fixture f;
  Stage2Config s = f.cfg.stage2;
  s.n = f.cfg.predictor.max_positions + 1;
  EXPECT_THROW(train_stage2(f.gen, f.pred, f.reg, s), ParameterError);
  PredictorConfig pc = f.cfg.predictor;
  pc.feature_resolution = 18;
  EXPECT_THROW(PredictorModel{pc}, ParameterError);
}

}  // namespace
}  // namespace autodrag
