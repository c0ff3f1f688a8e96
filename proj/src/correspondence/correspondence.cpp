// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "correspondence/correspondence.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace autodrag {

namespace {

// Grid points under the object mask, restricted to its bounding disc.
std::vector<Point> mask_grid(const ToyGenerator& gen, const SceneParams& p, double step) {
  const int res = gen.image_resolution();
  const double radius = ToyGenerator::kSemiAxisX * p.scale * res + step;
  const double cx = p.cx * res;
  const double cy = p.cy * res;
  const int n = static_cast<int>(std::floor(res / step));
  const int i0 = std::max(0, static_cast<int>(std::floor((cx - radius) / step)));
  const int i1 = std::min(n - 1, static_cast<int>(std::ceil((cx + radius) / step)));
  const int j0 = std::max(0, static_cast<int>(std::floor((cy - radius) / step)));
  const int j1 = std::min(n - 1, static_cast<int>(std::ceil((cy + radius) / step)));
  std::vector<Point> out;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Point q{(i + 0.5) * step, (j + 0.5) * step};
      if (gen.mask_at(p, q) > 0.5) out.push_back(q);
    }
  }
  return out;
}

}  // namespace

bool in_image(const Point& p, int image_resolution) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < image_resolution && p.y < image_resolution;
}

OracleMatcher::OracleMatcher(const ToyGenerator& gen, double grid_step) : gen_(gen), step_(grid_step) {
  if (!(grid_step > 0.0)) throw ParameterError("grid step must be positive");
}

std::vector<PointPair> OracleMatcher::match(const LatentCode& a, const LatentCode& b, double min_distance) const {
  const SceneParams pa = gen_.decode_params(a);
  const SceneParams pb = gen_.decode_params(b);
  const int res = gen_.image_resolution();
  std::vector<PointPair> out;
  for (const Point& h : mask_grid(gen_, pa, step_)) {
    const Point t = gen_.image_position(pb, gen_.object_coords(pa, h));
    if (in_image(t, res) && distance(h, t) > min_distance) out.push_back({h, t});
  }
  for (const Point& t : mask_grid(gen_, pb, step_)) {
    const Point h = gen_.image_position(pa, gen_.object_coords(pb, t));
    if (in_image(h, res) && distance(h, t) > min_distance) out.push_back({h, t});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PointPair& x, const PointPair& y) { return x.distance() < y.distance(); });
  return out;
}

std::vector<PointPair> match_points(const ToyGenerator& gen, const LatentCode& a, const LatentCode& b,
                                    double min_distance, double grid_step) {
  return OracleMatcher(gen, grid_step).match(a, b, min_distance);
}

std::array<int, 2> feature_cell(const Point& p, int image_resolution, int feature_resolution) {
  if (!in_image(p, image_resolution)) {
    std::ostringstream msg;
    msg << "point (" << p.x << ", " << p.y << ") outside the " << image_resolution << " px image";
    throw ParameterError(msg.str());
  }
  const double f = static_cast<double>(feature_resolution) / image_resolution;
  const int ix = std::min(feature_resolution - 1, static_cast<int>(std::floor(p.x * f)));
  const int iy = std::min(feature_resolution - 1, static_cast<int>(std::floor(p.y * f)));
  return {ix, iy};
}

std::vector<int> patch_rows(const Point& p, int image_resolution, int feature_resolution) {
  const auto [cx, cy] = feature_cell(p, image_resolution, feature_resolution);
  std::vector<int> rows;
  rows.reserve(kPatchCells);
  constexpr int half = kPatchSize / 2;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      const bool inside = x >= 0 && y >= 0 && x < feature_resolution && y < feature_resolution;
      rows.push_back(inside ? y * feature_resolution + x : -1);
    }
  }
  return rows;
}

Patch extract_patch(const FeatureMap& feature, const Point& p, int image_resolution) {
  const auto cell = feature_cell(p, image_resolution, feature.resolution);
  const std::vector<int> rows = patch_rows(p, image_resolution, feature.resolution);
  Patch patch;
  patch.center_x = cell[0];
  patch.center_y = cell[1];
  patch.channels = feature.channels;
  patch.values = Matrix::Zero(kPatchCells, feature.channels);
  for (int k = 0; k < kPatchCells; ++k) {
    if (rows[static_cast<std::size_t>(k)] >= 0) patch.values.row(k) = feature.cells.row(rows[static_cast<std::size_t>(k)]);
  }
  return patch;
}

std::vector<Point> patch_points(const Point& p, int image_resolution, int feature_resolution) {
  const double step = static_cast<double>(image_resolution) / feature_resolution;
  std::vector<Point> out;
  out.reserve(kPatchCells);
  constexpr int half = kPatchSize / 2;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) out.push_back(Point{p.x + dx * step, p.y + dy * step});
  }
  return out;
}

std::vector<PointPair> parse_points(std::istream& in) {
  std::vector<PointPair> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        const double x = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(x)) throw std::invalid_argument(tok);
        v.push_back(x);
      } catch (const std::exception&) {
        throw ParseError("not a number: '" + tok + "'", number);
      }
    }
    if (v.empty()) continue;
    if (v.size() != 4 && v.size() != 5) {
      throw ParseError("expected 'hx hy tx ty [dist]', got " + std::to_string(v.size()) + " fields", number);
    }
    PointPair pair{{v[0], v[1]}, {v[2], v[3]}};
    if (v.size() == 5 && std::abs(v[4] - pair.distance()) > 1e-3 * std::max(1.0, pair.distance())) {
      throw ParseError("distance column disagrees with the coordinates", number);
    }
    out.push_back(pair);
  }
  return out;
}

std::vector<PointPair> read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open points file " + path);
  return parse_points(in);
}

void write_points(std::ostream& out, const std::vector<PointPair>& pairs) {
  out << std::setprecision(17);
  for (const PointPair& p : pairs) {
    out << p.handle.x << ' ' << p.handle.y << ' ' << p.target.x << ' ' << p.target.y << ' ' << p.distance() << '\n';
  }
}

}  // namespace autodrag
