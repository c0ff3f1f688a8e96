// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "errors.hpp"
#include "inference/inference.hpp"
#include "small_models.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace autodrag {
namespace {

struct Fixture {
  RunConfig cfg = testing::small_run_config();
  ToyGenerator gen{cfg.generator};
  RegularizerModel reg{cfg.regularizer};
  PredictorModel pred{cfg.predictor};
  EditModels models{&gen, &pred, &reg};

  EditRequest request(std::uint64_t seed) const {
    Rng rng(seed);
    EditRequest r;
    r.w0 = gen.sample_latent(rng);
    const Point h = gen.keypoints(r.w0, 1)[0];
    r.pairs = {{h, {h.x + 5, h.y - 3}}};
    return r;
  }
};

TEST(Inference, CountsAndCurveShape) {
  Fixture f;
  for (int rounds : {1, 2}) {
    EditRequest r = f.request(1);
    r.n_steps = 4;
    r.rounds = rounds;
    const EditResult out = edit(f.models, r);
    EXPECT_EQ(out.gradient_evaluations, 0u);
    EXPECT_LE(out.synthesis_calls, static_cast<std::uint64_t>(rounds * 5));
    EXPECT_EQ(out.trajectory.size(), static_cast<std::size_t>(rounds * 4 + 1));
    EXPECT_EQ(out.mdd_curve.size(), out.trajectory.size());
    EXPECT_EQ(out.mdd_curve[0], 1.0);
    EXPECT_TRUE(out.trajectory[0].values == r.w0.values);
    EXPECT_TRUE(out.w_final.values == out.trajectory.back().values);
    EXPECT_EQ(out.images.size(), out.trajectory.size());
    out.trajectory.validate(f.gen.edit_spec());
  }
}

TEST(Inference, FinalImageOnlyWhenStepsNotKept) {
  Fixture f;
  EditRequest r = f.request(2);
  r.keep_step_images = false;
  const EditResult out = edit(f.models, r);
  ASSERT_EQ(out.images.size(), 1u);
  EXPECT_EQ(out.images[0].rgb, f.gen.render(out.w_final).rgb);
  EXPECT_LE(out.synthesis_calls, 6u);
}

TEST(Inference, ZeroDragIsIdentity) {
  Fixture f;
  EditRequest r = f.request(3);
  r.pairs = {{r.pairs[0].handle, r.pairs[0].handle}};
  const EditResult out = edit(f.models, r);
  EXPECT_TRUE(out.w_final.values == r.w0.values);
  for (double v : out.mdd_curve) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(out.images.back().rgb, f.gen.render(r.w0).rgb);
}

TEST(Inference, Errors) {
  Fixture f;
  EditRequest r = f.request(4);
  EditRequest bg = r;
  bg.pairs = {{{0.5, 0.5}, {4, 4}}};
  EXPECT_THROW(edit(f.models, bg), NoCorrespondenceError);
  EditRequest out_of_image = r;
  out_of_image.pairs[0].target = {-3, 10};
  EXPECT_THROW(edit(f.models, out_of_image), ParameterError);
  EditRequest too_long = r;
  too_long.n_steps = f.cfg.predictor.max_positions + 1;
  EXPECT_THROW(edit(f.models, too_long), ParameterError);
  EXPECT_THROW(edit(EditModels{&f.gen, nullptr, nullptr}, r), StateError);
  EditRequest none = r;
  none.pairs.clear();
  EXPECT_THROW(edit(f.models, none), ParameterError);
}

TEST(Inference, TracksMaterialPoints) {
  Fixture f;
  EditRequest r = f.request(5);
  const Point h = r.pairs[0].handle, t = r.pairs[0].target;
  const LatentCode moved = f.gen.oracle_latent_for_move(r.w0, h, t);
  const Point got = track_handles(f.gen, r.w0, {h}, moved)[0];
  EXPECT_NEAR(got.x, t.x, 1e-6);
  EXPECT_NEAR(got.y, t.y, 1e-6);
}

TEST(Inference, SavesResultDirectory) {
  Fixture f;
  EditRequest r = f.request(6);
  r.n_steps = 2;
  const EditResult out = edit(f.models, r);
  const auto dir = std::filesystem::temp_directory_path() / "autodrag_inference_test";
  std::filesystem::remove_all(dir);
  save_edit_result(out, dir.string());
  for (const char* name : {"trajectory.bin", "step_000.png", "step_002.png", "mdd.csv", "meta"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_EQ(std::filesystem::file_size(dir / "trajectory.bin"), 8u + 12u + 3u * 12u * 64u * 8u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace autodrag
