// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "evaluation/evaluation.hpp"
#include "small_models.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace autodrag {
namespace {

struct Fixture {
  RunConfig cfg = testing::small_run_config();
  ToyGenerator gen{cfg.generator};
  RegularizerModel reg{cfg.regularizer};
  PredictorModel pred{cfg.predictor};
  EvalContext ctx{EditModels{&gen, &pred, &reg}, cfg.inference, "hash"};
};

TEST(Metrics, MeanDistance) {
  const std::vector<Point> a{{0, 0}, {1, 1}}, b{{3, 4}, {1, 1}};
  EXPECT_EQ(mean_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mean_distance({{0, 0}}, {{3, 4}}), 5.0);
  EXPECT_DOUBLE_EQ(mean_distance(a, b), 2.5);
  EXPECT_THROW(mean_distance(a, {{0, 0}}), ParameterError);
  EXPECT_THROW(mean_distance({}, {}), ParameterError);
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 512);
  std::vector<Point> p, q;
  for (int i = 0; i < 50; ++i) {
    p.push_back({u(rng), u(rng)});
    q.push_back({u(rng), u(rng)});
  }
  double brute = 0;
  for (int i = 0; i < 50; ++i) brute += std::hypot(p[i].x - q[i].x, p[i].y - q[i].y);
  EXPECT_NEAR(mean_distance(p, q), brute / 50, 1e-9);
}

TEST(Metrics, Mdd) {
  EXPECT_EQ(mdd(7.0, 7.0), 1.0);
  EXPECT_EQ(mdd(0.0, 3.0), 0.0);
  EXPECT_THROW(mdd(1.0, 0.0), UndefinedRatioError);
}

TEST(Metrics, ImageMse) {
  const Image a{1, 1, {0.0, 0.0, 0.0}}, b{1, 1, {0.1, 0.0, 0.2}};
  EXPECT_NEAR(image_mse100(a, b), 100.0 * (0.01 + 0.04) / 3.0, 1e-12);
  EXPECT_THROW(image_mse100(a, Image{2, 1, std::vector<double>(6)}), ShapeError);
}

TEST(Metrics, ReportMeanMatchesValues) {
  MetricReport r;
  r.values = {3.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(r.mean(), 2.0);
  EXPECT_TRUE(std::isnan(MetricReport{}.mean()));
}

TEST(Evaluation, SampledDragsAreValid) {
  const ToyGenerator gen;
  const auto drags = sample_drags(gen, 30, 30, 50, 77);
  ASSERT_EQ(drags.size(), 30u);
  for (const Drag& d : drags) {
    EXPECT_GE(d.pair.distance(), 30.0 - 1e-9);
    EXPECT_LE(d.pair.distance(), 50.0 + 1e-9);
    EXPECT_GT(gen.mask_at(gen.decode_params(d.w0), d.pair.handle), 0.5);
    EXPECT_TRUE(in_image(d.pair.target, 512));
  }
  const auto again = sample_drags(gen, 30, 30, 50, 77);
  EXPECT_EQ(again[5].pair, drags[5].pair);
}

TEST(Evaluation, ProtocolIdentities) {
  Fixture f;
  const MetricReport zero = landmark_eval(f.ctx, 5, 4, 1, true);
  ASSERT_EQ(zero.count(), 4u);
  EXPECT_LT(zero.mean(), 2.0);
  PairedSpec spec;
  spec.trials = 3;
  spec.identity = true;
  const MetricReport same = paired_eval(f.ctx, spec);
  ASSERT_EQ(same.count(), 3u);
  EXPECT_LT(same.mean(), 1e-4);
}

TEST(Evaluation, ReportsAndCurves) {
  Fixture f;
  const MetricReport lm = landmark_eval(f.ctx, 1, 3, 2);
  EXPECT_EQ(lm.count() + static_cast<std::size_t>(lm.failures), 3u);
  EXPECT_EQ(lm.baseline.size(), lm.count());
  const MddCurves c = mdd_curve_eval(f.ctx, sample_drags(f.gen, 3, 4, 8, 5));
  ASSERT_EQ(c.curves.size(), 3u);
  ASSERT_EQ(c.mean_curve.size(), static_cast<std::size_t>(f.cfg.inference.n_steps + 1));
  EXPECT_EQ(c.mean_curve[0], 1.0);

  const auto dir = std::filesystem::temp_directory_path() / "autodrag_eval_test";
  std::filesystem::create_directories(dir);
  write_report_csv(lm, (dir / "lm.csv").string());
  write_curves_csv(c, (dir / "curves.csv").string());
  std::ifstream in(dir / "lm.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "trial,md_px,no_edit");
  EXPECT_NE(reports_summary_json({lm, c.final_mdd}).find("\"protocol\": \"mdd\""), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace autodrag
