// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Handle/target point pairs between two generated images and the 7x7
// feature-cell patches around them.

#pragma once

#include "generator/toy_generator.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace autodrag {

struct PointPair {
  Point handle;
  Point target;

  double distance() const { return autodrag::distance(handle, target); }
  bool operator==(const PointPair&) const = default;
};

inline constexpr int kPatchSize = 7;
inline constexpr int kPatchCells = kPatchSize * kPatchSize;

struct Patch {
  int center_x = 0;  // feature-grid cell
  int center_y = 0;
  int channels = 0;
  // kPatchCells x channels, raster order within the window; zero outside the grid.
  Matrix values;
};

class Matcher {
 public:
  virtual ~Matcher() = default;
  // Pairs (handle on a, target on b) with distance strictly above min_distance.
  virtual std::vector<PointPair> match(const LatentCode& a, const LatentCode& b, double min_distance) const = 0;
};

// Exact correspondences from the generator's object frame. Candidates lie on a
// pixel grid over the object mask of either image, so match(a, b) and
// match(b, a) return the same pairs with roles swapped.
class OracleMatcher final : public Matcher {
 public:
  explicit OracleMatcher(const ToyGenerator& gen, double grid_step = 4.0);
  std::vector<PointPair> match(const LatentCode& a, const LatentCode& b, double min_distance) const override;

 private:
  const ToyGenerator& gen_;
  double step_;
};

std::vector<PointPair> match_points(const ToyGenerator& gen, const LatentCode& a, const LatentCode& b,
                                    double min_distance, double grid_step = 4.0);

// Feature cell containing a pixel coordinate.
std::array<int, 2> feature_cell(const Point& p, int image_resolution, int feature_resolution);

// Row indices of the 7x7 window around p in a (R*R) x C feature matrix; -1 marks padding.
std::vector<int> patch_rows(const Point& p, int image_resolution, int feature_resolution);

Patch extract_patch(const FeatureMap& feature, const Point& p, int image_resolution);

// Continuous 7x7 window: positions one feature cell apart, centred on p.
std::vector<Point> patch_points(const Point& p, int image_resolution, int feature_resolution);

bool in_image(const Point& p, int image_resolution);

// Text format: one "hx hy tx ty [dist]" per line; '#' starts a comment.
std::vector<PointPair> parse_points(std::istream& in);
std::vector<PointPair> read_points_file(const std::string& path);
void write_points(std::ostream& out, const std::vector<PointPair>& pairs);

}  // namespace autodrag
