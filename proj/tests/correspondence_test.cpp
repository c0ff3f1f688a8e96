// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "correspondence/correspondence.hpp"
#include "errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

namespace autodrag {
namespace {

TEST(Points, ParsesCommentsAndDistance) {
  std::istringstream in("# drag\n10 20 13 24 5\n\n  1.5 2 3 4   # tail\n");
  const auto pairs = parse_points(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].target, (Point{13, 24}));
  EXPECT_DOUBLE_EQ(pairs[1].handle.x, 1.5);
}

TEST(Points, MalformedLineReportsLine) {
  std::istringstream in("1 2 3 4\n1 2 three 4\n");
  try {
    parse_points(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream wrong_dist("0 0 3 4 7\n");
  EXPECT_THROW(parse_points(wrong_dist), ParseError);
  std::istringstream extra("0 0 3 4 5 6\n");
  EXPECT_THROW(parse_points(extra), ParseError);
}

TEST(Points, WriteParseRoundTrip) {
  const std::vector<PointPair> pairs{{{1.25, 2}, {3, 4}}, {{100, 200}, {140, 170}}};
  std::stringstream s;
  write_points(s, pairs);
  EXPECT_EQ(parse_points(s), pairs);
}

TEST(Patch, RowsPadOutsideGrid) {
  const auto corner = patch_rows({0.5, 0.5}, 512, 32);
  ASSERT_EQ(corner.size(), static_cast<std::size_t>(kPatchCells));
  EXPECT_EQ(std::count(corner.begin(), corner.end(), -1), kPatchCells - 16);
  const auto mid = patch_rows({256, 256}, 512, 32);
  EXPECT_EQ(std::count(mid.begin(), mid.end(), -1), 0);
  EXPECT_EQ(mid[kPatchCells / 2], 16 * 32 + 16);
  EXPECT_THROW(feature_cell({512, 3}, 512, 32), ParameterError);
}

TEST(Patch, ExtractMatchesFeatureMap) {
  const ToyGenerator g;
  Rng rng(4);
  const LatentCode w = g.sample_latent(rng);
  const FeatureMap f = g.features(w);
  const Patch p = extract_patch(f, {200, 300}, 512);
  EXPECT_EQ(p.center_x, 12);
  EXPECT_EQ(p.center_y, 18);
  EXPECT_DOUBLE_EQ(p.values(kPatchCells / 2, kFeatMask), f.at(12, 18, kFeatMask));
}

TEST(Patch, ContinuousWindowMatchesGridAtCellCentres) {
  const ToyGenerator g;
  Rng rng(4);
  const LatentCode w = g.sample_latent(rng);
  const FeatureMap f = g.features(w);
  const Point centre{12 * 16 + 8, 18 * 16 + 8};
  const std::vector<Point> pts = patch_points(centre, 512, 32);
  ASSERT_EQ(pts.size(), static_cast<std::size_t>(kPatchCells));
  EXPECT_EQ(pts[kPatchCells / 2], centre);
  const Matrix at = g.features_at(w, pts);
  EXPECT_LT((at - extract_patch(f, centre, 512).values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Oracle, PairsAreExactAndSymmetric) {
  const ToyGenerator g;
  Rng rng(8);
  const LatentCode a = g.sample_latent(rng);
  const LatentCode b = g.sample_latent(rng);
  const OracleMatcher m(g);
  const auto ab = m.match(a, b, 10.0);
  const auto ba = m.match(b, a, 10.0);
  ASSERT_FALSE(ab.empty());
  ASSERT_EQ(ab.size(), ba.size());
  const SceneParams pa = g.decode_params(a), pb = g.decode_params(b);
  for (const PointPair& p : ab) {
    EXPECT_GT(p.distance(), 10.0);
    const auto ua = g.object_coords(pa, p.handle);
    const auto ub = g.object_coords(pb, p.target);
    EXPECT_NEAR(ua[0], ub[0], 1e-9);
    EXPECT_NEAR(ua[1], ub[1], 1e-9);
    const bool mirrored = std::any_of(ba.begin(), ba.end(), [&](const PointPair& q) {
      return q.handle == p.target && q.target == p.handle;
    });
    EXPECT_TRUE(mirrored);
  }
  for (std::size_t i = 1; i < ab.size(); ++i) EXPECT_LE(ab[i - 1].distance(), ab[i].distance());
}

TEST(Oracle, SelfMatchIsZeroLength) {
  const ToyGenerator g;
  Rng rng(9);
  const LatentCode a = g.sample_latent(rng);
  const auto pairs = match_points(g, a, a, -1.0);
  ASSERT_FALSE(pairs.empty());
  for (const PointPair& p : pairs) EXPECT_NEAR(p.distance(), 0.0, 1e-9);
  EXPECT_TRUE(match_points(g, a, a, 0.5).empty());
}

}  // namespace
}  // namespace autodrag
