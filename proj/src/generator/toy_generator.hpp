// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// A frozen, analytically invertible style-based generator. Edit layers drive
// the pose of a single soft elliptical object (centre, rotation, scale);
// the remaining layers drive its colour and texture. Besides the image, the
// generator renders a coarse feature map whose first two channels carry
// object-frame coordinates, which makes exact correspondences available.

#pragma once

#include "autograd/tape.hpp"
#include "latent/latent.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace autodrag {

struct GeneratorConfig {
  int latent_dim = 64;
  int z_dim = 32;
  int layers = 12;
  int edit_layers = 6;
  int image_resolution = 512;
  int feature_resolution = 32;
  int feature_channels = 8;
  // z entries feeding the edit layers; the first four of them are the pose.
  int pose_dims = 8;
  // Trailing pose dims that also feed the non-edit layers.
  int shared_dims = 2;
  double tanh_scale = 3.0;
  double bias_std = 0.5;
  // Mask edge softness in object-radius units.
  double edge_temperature = 0.05;
  std::uint64_t seed = 20240611;

  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

struct SceneParams {
  double cx = 0.5;  // normalised image coordinates
  double cy = 0.5;
  double theta = 0.0;
  double scale = 1.0;
  std::array<double, 3> color{0.5, 0.5, 0.5};
  double texture_phase = 0.0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(const Point& a, const Point& b);

// RGB, row-major, interleaved, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  double at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

// One row per cell in raster order (row = iy * resolution + ix), one column per channel.
struct FeatureMap {
  int resolution = 0;
  int channels = 0;
  Matrix cells;

  double at(int ix, int iy, int c) const { return cells(iy * resolution + ix, c); }
};

enum FeatureChannel : int {
  kFeatU = 0,
  kFeatV = 1,
  kFeatMask = 2,
  kFeatColor = 3,  // 3 channels
  kFeatTexU = 6,
  kFeatTexV = 7,
};

struct Synthesis {
  Image image;
  FeatureMap feature;
};

// Contract for plugging in other generators (map, synthesize, features, keypoints).
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual LatentCode sample_latent(Rng& rng) const = 0;
  virtual Synthesis synthesize(const LatentCode& w) const = 0;
  virtual FeatureMap features(const LatentCode& w) const = 0;
  virtual std::vector<Point> keypoints(const LatentCode& w, int count) const = 0;
  virtual int image_resolution() const = 0;
};

class ToyGenerator final : public GeneratorBackend {
 public:
  explicit ToyGenerator(const GeneratorConfig& config = {});

  const GeneratorConfig& config() const { return config_; }
  EditLayerSpec edit_spec() const { return EditLayerSpec{config_.edit_layers}; }
  int image_resolution() const override { return config_.image_resolution; }

  Eigen::VectorXd sample_z(Rng& rng) const;
  LatentCode map_z(const Eigen::VectorXd& z) const;
  LatentCode sample_latent(Rng& rng) const override;

  SceneParams decode_params(const LatentCode& w) const;
  // Minimal-norm edit block reproducing the spatial params, joined to `rest`.
  LatentCode encode_params(const SceneParams& params, const Matrix& rest) const;
  // Pre-activations of the spatial readout (cx, cy, theta, scale).
  Eigen::Vector4d spatial_preactivation(const LatentCode& w) const;

  Synthesis synthesize(const LatentCode& w) const override;
  FeatureMap features(const LatentCode& w) const override;
  Image render(const LatentCode& w) const;
  std::vector<Point> keypoints(const LatentCode& w, int count) const override;

  // Object-frame (u, v) of the material point under pixel `p`, in object radii.
  std::array<double, 2> object_coords(const SceneParams& params, const Point& p) const;
  Point image_position(const SceneParams& params, const std::array<double, 2>& uv) const;
  double mask_at(const SceneParams& params, const Point& p) const;

  // Moves the object by pure translation so the material under `handle`
  // lands on `target`; only edit layers change, by the minimal-norm amount.
  LatentCode oracle_latent_for_move(const LatentCode& w0, const Point& handle, const Point& target) const;

  // Differentiable feature map of a latent held on a tape: (R*R) x C.
  ag::Var feature_var(ag::Tape& tape, const ag::Var& latent) const;

  // The continuous feature field sampled at pixel positions, one row per point.
  Matrix features_at(const LatentCode& w, const std::vector<Point>& points) const;
  ag::Var features_at_var(ag::Tape& tape, const ag::Var& latent, std::vector<Point> points) const;

  // Mean of all image values and its analytic gradient w.r.t. the latent.
  double mean_intensity(const LatentCode& w) const;
  Matrix mean_intensity_gradient(const LatentCode& w) const;

  // Frozen weights, exposed for serialisation.
  const std::vector<Matrix>& mapping_weights() const { return mapping_; }
  const Matrix& mapping_bias() const { return bias_; }
  const Matrix& spatial_readout() const { return spatial_; }
  const Eigen::Vector4d& spatial_offset() const { return spatial_offset_; }
  const Matrix& appearance_readout() const { return appearance_; }
  const Eigen::Vector4d& appearance_offset() const { return appearance_offset_; }

  // Reassembles a generator from serialised weights.
  static ToyGenerator from_weights(const GeneratorConfig& config, std::vector<Matrix> mapping, Matrix bias,
                                   Matrix spatial, Eigen::Vector4d spatial_offset, Matrix appearance,
                                   Eigen::Vector4d appearance_offset);

  // Canonical object-frame keypoint anchors.
  static std::vector<std::array<double, 2>> anchors(int count);

  static constexpr double kSemiAxisX = 0.12;
  static constexpr double kSemiAxisY = 0.08;
  static constexpr double kBackground = 0.1;

 private:
  struct Uninitialised {};
  explicit ToyGenerator(Uninitialised, const GeneratorConfig& config) : config_(config) {}
  void derive_spatial_pinv();

  GeneratorConfig config_;
  std::vector<Matrix> mapping_;  // per layer: latent_dim x z_dim
  Matrix bias_;                  // layers x latent_dim
  Matrix spatial_;               // 4 x (edit_layers * latent_dim)
  Eigen::Vector4d spatial_offset_ = Eigen::Vector4d::Zero();
  Matrix appearance_;            // 4 x ((layers - edit_layers) * latent_dim)
  Eigen::Vector4d appearance_offset_ = Eigen::Vector4d::Zero();
  Matrix spatial_pinv_;          // (edit_layers * latent_dim) x 4
};

// Number of synthesize() calls made on the calling thread.
std::uint64_t synthesis_calls();

}  // namespace autodrag
