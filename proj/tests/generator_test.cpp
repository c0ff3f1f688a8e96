// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "generator/toy_generator.hpp"
#include "grad_check.hpp"

#include <gtest/gtest.h>

namespace autodrag {
namespace {

GeneratorConfig small_config() {
  GeneratorConfig c;
  c.image_resolution = 64;
  c.feature_resolution = 16;
  return c;
}

TEST(Generator, ConfigValidation) {
  GeneratorConfig c;
  c.edit_layers = 12;
  EXPECT_THROW(ToyGenerator{c}, ParameterError);
  c = GeneratorConfig{};
  c.z_dim = 10;
  EXPECT_THROW(ToyGenerator{c}, ParameterError);
}

TEST(Generator, ReadoutRecoversPose) {
  const ToyGenerator g;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z = g.sample_z(rng);
    const Eigen::Vector4d pre = g.spatial_preactivation(g.map_z(z));
    EXPECT_NEAR(pre(0), z(0), 0.6);
    EXPECT_NEAR(pre(1), z(1), 0.6);
  }
}

TEST(Generator, EncodeDecodeRoundTrip) {
  const ToyGenerator g;
  Rng rng(2);
  const LatentCode w = g.sample_latent(rng);
  const SceneParams p = g.decode_params(w);
  const LatentCode back = g.encode_params(p, w.values.bottomRows(6));
  const SceneParams q = g.decode_params(back);
  EXPECT_NEAR(p.cx, q.cx, 1e-9);
  EXPECT_NEAR(p.cy, q.cy, 1e-9);
  EXPECT_NEAR(p.theta, q.theta, 1e-9);
  EXPECT_NEAR(p.scale, q.scale, 1e-9);
  EXPECT_EQ(p.color, q.color);
  SceneParams bad = p;
  bad.cx = 0.9;
  EXPECT_THROW(g.encode_params(bad, w.values.bottomRows(6)), ParameterError);
}

TEST(Generator, SynthesisShapesAndCounter) {
  const ToyGenerator g(small_config());
  Rng rng(3);
  const LatentCode w = g.sample_latent(rng);
  const auto before = synthesis_calls();
  const Synthesis s = g.synthesize(w);
  EXPECT_EQ(synthesis_calls(), before + 1);
  EXPECT_EQ(s.image.width, 64);
  EXPECT_EQ(s.image.rgb.size(), 64u * 64u * 3u);
  EXPECT_EQ(s.feature.cells.rows(), 256);
  EXPECT_EQ(s.feature.cells.cols(), 8);
  for (double v : s.image.rgb) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Generator, FeatureGradientMatchesFiniteDifferences) {
  const ToyGenerator g(small_config());
  Rng rng(4);
  const LatentCode w = g.sample_latent(rng);
  Matrix weights(256, 8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = n(rng);
  const double err = testing::max_grad_error(
      w.values, [&](ag::Tape& t, const ag::Var& v) {
        return ag::sum(ag::mul(g.feature_var(t, v), t.constant(weights)));
      });
  EXPECT_LT(err, 1e-4);
}

TEST(Generator, PointFeatureGradientMatchesFiniteDifferences) {
  const ToyGenerator g(small_config());
  Rng rng(14);
  const LatentCode w = g.sample_latent(rng);
  const SceneParams p = g.decode_params(w);
  std::vector<Point> pts;
  for (int k = 0; k < 20; ++k) pts.push_back(g.image_position(p, {0.1 * (k % 5) - 0.2, 0.15 * (k / 5) - 0.3}));
  Matrix weights(20, 8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = n(rng);
  const double err = testing::max_grad_error(
      w.values, [&](ag::Tape& t, const ag::Var& v) {
        return ag::sum(ag::mul(g.features_at_var(t, v, pts), t.constant(weights)));
      });
  EXPECT_LT(err, 1e-4);
}

TEST(Generator, MeanIntensityGradient) {
  const ToyGenerator g(small_config());
  Rng rng(5);
  const LatentCode w = g.sample_latent(rng);
  const Matrix grad = g.mean_intensity_gradient(w);
  const double h = 1e-6;
  for (int k = 0; k < 12; ++k) {
    const int r = k % 12;
    const int c = (k * 7) % 64;
    Matrix a = w.values, b = w.values;
    a(r, c) += h;
    b(r, c) -= h;
    const double fd = (g.mean_intensity(LatentCode(a)) - g.mean_intensity(LatentCode(b))) / (2 * h);
    EXPECT_NEAR(fd, grad(r, c), 1e-6 + 1e-4 * std::abs(fd));
  }
}

TEST(Generator, OracleMovesHandleOntoTarget) {
  const ToyGenerator g;
  Rng rng(6);
  int checked = 0;
  while (checked < 50) {
    const LatentCode w = g.sample_latent(rng);
    const SceneParams p = g.decode_params(w);
    const auto kp = g.keypoints(w, 1);
    const Point h = kp[0];
    std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
    const double a = ang(rng);
    const Point t{h.x + 40.0 * std::cos(a), h.y + 40.0 * std::sin(a)};
    LatentCode moved;
    try {
      moved = g.oracle_latent_for_move(w, h, t);
    } catch (const ParameterError&) {
      continue;
    }
    const SceneParams q = g.decode_params(moved);
    const Point landed = g.image_position(q, g.object_coords(p, h));
    EXPECT_LT(distance(landed, t), 1e-6);
    EXPECT_TRUE(moved.values.bottomRows(6) == w.values.bottomRows(6));
    ++checked;
  }
}

TEST(Generator, OracleRejectsBackgroundHandle) {
  const ToyGenerator g;
  Rng rng(7);
  const LatentCode w = g.sample_latent(rng);
  const SceneParams p = g.decode_params(w);
  const Point far{p.cx * 512 + 200.0 > 511 ? 1.0 : 511.0, 1.0};
  EXPECT_THROW(g.oracle_latent_for_move(w, far, Point{256, 256}), NoCorrespondenceError);
}

TEST(Generator, KeypointsOnObject) {
  const ToyGenerator g;
  Rng rng(8);
  const LatentCode w = g.sample_latent(rng);
  const SceneParams p = g.decode_params(w);
  for (const Point& k : g.keypoints(w, 16)) EXPECT_GT(g.mask_at(p, k), 0.5);
}

TEST(Generator, RebuildFromWeights) {
  const ToyGenerator g;
  const ToyGenerator h = ToyGenerator::from_weights(g.config(), g.mapping_weights(), g.mapping_bias(),
                                                    g.spatial_readout(), g.spatial_offset(), g.appearance_readout(),
                                                    g.appearance_offset());
  Rng rng(9);
  const LatentCode w = g.sample_latent(rng);
  EXPECT_TRUE(g.features(w).cells == h.features(w).cells);
}

}  // namespace
}  // namespace autodrag
