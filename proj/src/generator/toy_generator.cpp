// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "generator/toy_generator.hpp"

#include "errors.hpp"

#include <cmath>
#include <numbers>

namespace autodrag {

namespace {

thread_local std::uint64_t t_synthesis_calls = 0;

constexpr double kCenterRange = 0.3;
constexpr double kCenterGain = 0.8;
constexpr double kThetaGain = 0.5;
constexpr double kScaleRange = 0.25;
constexpr double kScaleGain = 0.6;
constexpr double kColorGain = 1.5;
constexpr double kTexFreq = 3.0 * std::numbers::pi;
constexpr double kTexBase = 0.55;
constexpr double kTexAmp = 0.45;

using Vec8 = std::array<double, 8>;  // cx, cy, theta, scale, r, g, b, phase

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Soft object coverage and object-frame coordinates at a normalised point,
// with derivatives w.r.t. (cx, cy, theta, scale).
struct Shade {
  double m = 0.0, u = 0.0, v = 0.0;
  std::array<double, 4> du{}, dv{}, dm{};
};

Shade shade(const SceneParams& p, double px, double py, double tau, bool derivs) {
  const double dx = px - p.cx;
  const double dy = py - p.cy;
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double as = ToyGenerator::kSemiAxisX * p.scale;
  const double bs = ToyGenerator::kSemiAxisY * p.scale;
  Shade out;
  out.u = lx / as;
  out.v = ly / bs;
  const double q = (1.0 - out.u * out.u - out.v * out.v) / (2.0 * tau);
  out.m = sigmoid(q);
  if (derivs) {
    out.du = {-c / as, -s / as, ly / as, -out.u / p.scale};
    out.dv = {s / bs, -c / bs, -lx / bs, -out.v / p.scale};
    const double dmdq = out.m * (1.0 - out.m);
    for (int k = 0; k < 4; ++k) out.dm[k] = dmdq * (-(out.u * out.du[k] + out.v * out.dv[k]) / tau);
  }
  return out;
}

// Feature channel values at a shade sample, optionally with d/dparams.
void feature_values(const SceneParams& p, const Shade& sh, double* f, std::array<Vec8, 8>* df) {
  const double su = std::sin(kTexFreq * sh.u + p.texture_phase);
  const double cu = std::cos(kTexFreq * sh.u + p.texture_phase);
  const double sv = std::sin(kTexFreq * sh.v + p.texture_phase);
  const double cv = std::cos(kTexFreq * sh.v + p.texture_phase);
  f[kFeatU] = sh.m * sh.u;
  f[kFeatV] = sh.m * sh.v;
  f[kFeatMask] = sh.m;
  for (int j = 0; j < 3; ++j) f[kFeatColor + j] = sh.m * p.color[j];
  f[kFeatTexU] = sh.m * su;
  f[kFeatTexV] = sh.m * cv;
  if (df == nullptr) return;
  for (auto& row : *df) row.fill(0.0);
  for (int k = 0; k < 4; ++k) {
    (*df)[kFeatU][k] = sh.dm[k] * sh.u + sh.m * sh.du[k];
    (*df)[kFeatV][k] = sh.dm[k] * sh.v + sh.m * sh.dv[k];
    (*df)[kFeatMask][k] = sh.dm[k];
    for (int j = 0; j < 3; ++j) (*df)[kFeatColor + j][k] = sh.dm[k] * p.color[j];
    (*df)[kFeatTexU][k] = sh.dm[k] * su + sh.m * cu * kTexFreq * sh.du[k];
    (*df)[kFeatTexV][k] = sh.dm[k] * cv - sh.m * sv * kTexFreq * sh.dv[k];
  }
  for (int j = 0; j < 3; ++j) (*df)[kFeatColor + j][4 + j] = sh.m;
  (*df)[kFeatTexU][7] = sh.m * cu;
  (*df)[kFeatTexV][7] = -sh.m * sv;
}

Matrix stacked_columns(const std::vector<Matrix>& mapping, int first_layer, int last_layer, int col0, int ncols) {
  const Eigen::Index d = mapping.front().rows();
  Matrix out(d * (last_layer - first_layer), ncols);
  for (int l = first_layer; l < last_layer; ++l) {
    out.middleRows((l - first_layer) * d, d) = mapping[static_cast<std::size_t>(l)].middleCols(col0, ncols);
  }
  return out;
}

Matrix pseudo_inverse_rows(const Matrix& m) {
  // (M^T M)^-1 M^T; m has full column rank by construction.
  const Matrix mtm = m.transpose() * m;
  return mtm.ldlt().solve(m.transpose());
}

}  // namespace

std::uint64_t synthesis_calls() { return t_synthesis_calls; }

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void GeneratorConfig::validate() const {
  if (latent_dim < 1 || z_dim < 1 || layers < 2) throw ParameterError("generator dimensions must be positive");
  if (edit_layers < 1 || edit_layers >= layers) throw ParameterError("edit_layers must lie in [1, layers)");
  if (feature_channels != 8) throw ParameterError("the toy feature map has exactly 8 channels");
  if (image_resolution < 8 || feature_resolution < 2) throw ParameterError("resolutions too small");
  if (pose_dims < 4 || shared_dims < 0 || shared_dims > pose_dims - 4) {
    throw ParameterError("pose_dims must be >= 4 and shared_dims must not touch the pose block");
  }
  if (z_dim < pose_dims + 6) throw ParameterError("z_dim too small for pose and appearance blocks");
  if (edit_layers * latent_dim < pose_dims) throw ParameterError("edit block too narrow for pose_dims");
  if (!(tanh_scale > 0.0) || !(edge_temperature > 0.0)) throw ParameterError("scales must be positive");
}

ToyGenerator::ToyGenerator(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int d = config_.latent_dim;
  const int p = config_.pose_dims;
  const int first_shared = p - config_.shared_dims;
  const int q = config_.z_dim - first_shared;

  bias_.resize(config_.layers, d);
  for (Eigen::Index i = 0; i < bias_.size(); ++i) bias_.data()[i] = config_.bias_std * unit(rng);

  mapping_.assign(static_cast<std::size_t>(config_.layers), Matrix::Zero(d, config_.z_dim));
  for (int l = 0; l < config_.layers; ++l) {
    Matrix& m = mapping_[static_cast<std::size_t>(l)];
    const bool edit = l < config_.edit_layers;
    const int c0 = edit ? 0 : first_shared;
    const int nc = edit ? p : q;
    const double sd = 1.0 / std::sqrt(static_cast<double>(nc));
    for (int r = 0; r < d; ++r) {
      for (int c = c0; c < c0 + nc; ++c) m(r, c) = sd * unit(rng);
    }
  }

  const int e = config_.edit_layers;
  spatial_ = pseudo_inverse_rows(stacked_columns(mapping_, 0, e, 0, p)).topRows(4);
  const Matrix appearance_full = pseudo_inverse_rows(stacked_columns(mapping_, e, config_.layers, first_shared, q));
  appearance_ = appearance_full.middleRows(config_.shared_dims + 2, 4);

  const Eigen::Map<const Eigen::VectorXd> edit_bias(bias_.data(), static_cast<Eigen::Index>(e) * d);
  const Eigen::Map<const Eigen::VectorXd> rest_bias(bias_.data() + static_cast<Eigen::Index>(e) * d,
                                                    static_cast<Eigen::Index>(config_.layers - e) * d);
  spatial_offset_ = -(spatial_ * edit_bias);
  appearance_offset_ = -(appearance_ * rest_bias);
  derive_spatial_pinv();
}

ToyGenerator ToyGenerator::from_weights(const GeneratorConfig& config, std::vector<Matrix> mapping, Matrix bias,
                                        Matrix spatial, Eigen::Vector4d spatial_offset, Matrix appearance,
                                        Eigen::Vector4d appearance_offset) {
  config.validate();
  const int d = config.latent_dim;
  const int e = config.edit_layers;
  if (mapping.size() != static_cast<std::size_t>(config.layers)) throw FormatError("mapping layer count mismatch");
  for (const Matrix& m : mapping) {
    if (m.rows() != d || m.cols() != config.z_dim) throw FormatError("mapping weight shape mismatch");
  }
  if (bias.rows() != config.layers || bias.cols() != d) throw FormatError("mapping bias shape mismatch");
  if (spatial.rows() != 4 || spatial.cols() != e * d) throw FormatError("spatial readout shape mismatch");
  if (appearance.rows() != 4 || appearance.cols() != (config.layers - e) * d) {
    throw FormatError("appearance readout shape mismatch");
  }
  ToyGenerator g(Uninitialised{}, config);
  g.mapping_ = std::move(mapping);
  g.bias_ = std::move(bias);
  g.spatial_ = std::move(spatial);
  g.spatial_offset_ = spatial_offset;
  g.appearance_ = std::move(appearance);
  g.appearance_offset_ = appearance_offset;
  g.derive_spatial_pinv();
  return g;
}

void ToyGenerator::derive_spatial_pinv() {
  const Matrix aat = spatial_ * spatial_.transpose();
  Eigen::FullPivLU<Matrix> lu(aat);
  if (lu.rank() < 4) throw FormatError("spatial readout is rank deficient");
  spatial_pinv_ = spatial_.transpose() * lu.inverse();
}

Eigen::VectorXd ToyGenerator::sample_z(Rng& rng) const {
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(config_.z_dim);
  for (int i = 0; i < config_.z_dim; ++i) z(i) = unit(rng);
  return z;
}

LatentCode ToyGenerator::map_z(const Eigen::VectorXd& z) const {
  if (z.size() != config_.z_dim) throw ShapeError("z has the wrong dimension");
  if (!z.allFinite()) throw ParameterError("z has non-finite entries");
  const double s = config_.tanh_scale;
  Matrix w(config_.layers, config_.latent_dim);
  for (int l = 0; l < config_.layers; ++l) {
    const Eigen::VectorXd pre = mapping_[static_cast<std::size_t>(l)] * z;
    w.row(l) = bias_.row(l) + (s * (pre.array() / s).tanh()).matrix().transpose();
  }
  return LatentCode(std::move(w));
}

LatentCode ToyGenerator::sample_latent(Rng& rng) const { return map_z(sample_z(rng)); }

Eigen::Vector4d ToyGenerator::spatial_preactivation(const LatentCode& w) const {
  if (w.layers() != config_.layers || w.dim() != config_.latent_dim) throw ShapeError("latent shape mismatch");
  const Eigen::Map<const Eigen::VectorXd> edit(w.values.data(),
                                               static_cast<Eigen::Index>(config_.edit_layers) * config_.latent_dim);
  return spatial_ * edit + spatial_offset_;
}

namespace {

Eigen::Vector4d appearance_preactivation(const ToyGenerator& g, const LatentCode& w) {
  const auto& cfg = g.config();
  const Eigen::Index off = static_cast<Eigen::Index>(cfg.edit_layers) * cfg.latent_dim;
  const Eigen::Map<const Eigen::VectorXd> rest(w.values.data() + off,
                                               static_cast<Eigen::Index>(cfg.layers - cfg.edit_layers) * cfg.latent_dim);
  return g.appearance_readout() * rest + g.appearance_offset();
}

SceneParams params_from_preactivations(const Eigen::Vector4d& sp, const Eigen::Vector4d& ap) {
  SceneParams p;
  p.cx = 0.5 + kCenterRange * std::tanh(kCenterGain * sp(0));
  p.cy = 0.5 + kCenterRange * std::tanh(kCenterGain * sp(1));
  p.theta = kThetaGain * sp(2);
  p.scale = std::exp(kScaleRange * std::tanh(kScaleGain * sp(3)));
  for (int j = 0; j < 3; ++j) p.color[static_cast<std::size_t>(j)] = sigmoid(kColorGain * ap(j));
  p.texture_phase = std::numbers::pi * ap(3);
  return p;
}

// d(param)/d(preactivation) for the eight scene parameters (diagonal).
Vec8 param_slopes(const Eigen::Vector4d& sp, const SceneParams& p) {
  Vec8 s{};
  const double t0 = std::tanh(kCenterGain * sp(0));
  const double t1 = std::tanh(kCenterGain * sp(1));
  const double t3 = std::tanh(kScaleGain * sp(3));
  s[0] = kCenterRange * kCenterGain * (1.0 - t0 * t0);
  s[1] = kCenterRange * kCenterGain * (1.0 - t1 * t1);
  s[2] = kThetaGain;
  s[3] = p.scale * kScaleRange * kScaleGain * (1.0 - t3 * t3);
  for (int j = 0; j < 3; ++j) s[4 + j] = kColorGain * p.color[j] * (1.0 - p.color[j]);
  s[7] = std::numbers::pi;
  return s;
}

}  // namespace

SceneParams ToyGenerator::decode_params(const LatentCode& w) const {
  return params_from_preactivations(spatial_preactivation(w), appearance_preactivation(*this, w));
}

LatentCode ToyGenerator::encode_params(const SceneParams& params, const Matrix& rest) const {
  const double rx = (params.cx - 0.5) / kCenterRange;
  const double ry = (params.cy - 0.5) / kCenterRange;
  if (!(params.scale > 0.0)) throw ParameterError("scale must be positive");
  const double rs = std::log(params.scale) / kScaleRange;
  if (std::abs(rx) >= 1.0 || std::abs(ry) >= 1.0 || std::abs(rs) >= 1.0) {
    throw ParameterError("scene params outside the generator's pose range");
  }
  if (rest.rows() != config_.layers - config_.edit_layers || rest.cols() != config_.latent_dim) {
    throw ShapeError("non-edit block shape mismatch");
  }
  Eigen::Vector4d pre(std::atanh(rx) / kCenterGain, std::atanh(ry) / kCenterGain, params.theta / kThetaGain,
                      std::atanh(rs) / kScaleGain);
  const Eigen::VectorXd flat = spatial_pinv_ * (pre - spatial_offset_);
  Matrix edit = Eigen::Map<const Matrix>(flat.data(), config_.edit_layers, config_.latent_dim);
  return join_layers(edit, rest);
}

std::array<double, 2> ToyGenerator::object_coords(const SceneParams& params, const Point& p) const {
  const double w = config_.image_resolution;
  const Shade sh = shade(params, p.x / w, p.y / w, config_.edge_temperature, false);
  return {sh.u, sh.v};
}

Point ToyGenerator::image_position(const SceneParams& params, const std::array<double, 2>& uv) const {
  const double w = config_.image_resolution;
  const double lx = uv[0] * kSemiAxisX * params.scale;
  const double ly = uv[1] * kSemiAxisY * params.scale;
  const double c = std::cos(params.theta);
  const double s = std::sin(params.theta);
  return Point{w * (params.cx + c * lx - s * ly), w * (params.cy + s * lx + c * ly)};
}

double ToyGenerator::mask_at(const SceneParams& params, const Point& p) const {
  const double w = config_.image_resolution;
  return shade(params, p.x / w, p.y / w, config_.edge_temperature, false).m;
}

Image ToyGenerator::render(const LatentCode& w) const {
  const SceneParams p = decode_params(w);
  const int res = config_.image_resolution;
  Image img;
  img.width = res;
  img.height = res;
  img.rgb.resize(static_cast<std::size_t>(res) * res * 3);
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const Shade sh = shade(p, (x + 0.5) / res, (y + 0.5) / res, config_.edge_temperature, false);
      const double tex = 0.5 + 0.5 * std::sin(kTexFreq * sh.u + p.texture_phase);
      for (int c = 0; c < 3; ++c) {
        img.rgb[(static_cast<std::size_t>(y) * res + x) * 3 + c] =
            kBackground * (1.0 - sh.m) + sh.m * p.color[static_cast<std::size_t>(c)] * (kTexBase + kTexAmp * tex);
      }
    }
  }
  return img;
}

FeatureMap ToyGenerator::features(const LatentCode& w) const {
  const SceneParams p = decode_params(w);
  const int r = config_.feature_resolution;
  FeatureMap fm;
  fm.resolution = r;
  fm.channels = config_.feature_channels;
  fm.cells.resize(static_cast<Eigen::Index>(r) * r, fm.channels);
  double f[8];
  for (int iy = 0; iy < r; ++iy) {
    for (int ix = 0; ix < r; ++ix) {
      const Shade sh = shade(p, (ix + 0.5) / r, (iy + 0.5) / r, config_.edge_temperature, false);
      feature_values(p, sh, f, nullptr);
      for (int c = 0; c < 8; ++c) fm.cells(iy * r + ix, c) = f[c];
    }
  }
  return fm;
}

Synthesis ToyGenerator::synthesize(const LatentCode& w) const {
  ++t_synthesis_calls;
  return Synthesis{render(w), features(w)};
}

std::vector<std::array<double, 2>> ToyGenerator::anchors(int count) {
  if (count < 1) throw ParameterError("keypoint count must be at least 1");
  constexpr double kGoldenAngle = 2.399963229728653;
  std::vector<std::array<double, 2>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double rho = 0.7 * std::sqrt((k + 0.5) / count);
    const double phi = 0.3 + k * kGoldenAngle;
    out.push_back({rho * std::cos(phi), rho * std::sin(phi)});
  }
  return out;
}

std::vector<Point> ToyGenerator::keypoints(const LatentCode& w, int count) const {
  const SceneParams p = decode_params(w);
  std::vector<Point> out;
  for (const auto& uv : anchors(count)) out.push_back(image_position(p, uv));
  return out;
}

LatentCode ToyGenerator::oracle_latent_for_move(const LatentCode& w0, const Point& handle, const Point& target) const {
  const SceneParams p0 = decode_params(w0);
  if (mask_at(p0, handle) <= 0.5) throw NoCorrespondenceError("handle point is not on the object");
  if (handle == target) return w0;
  const double res = config_.image_resolution;
  const double cx = p0.cx + (target.x - handle.x) / res;
  const double cy = p0.cy + (target.y - handle.y) / res;
  const double rx = (cx - 0.5) / kCenterRange;
  const double ry = (cy - 0.5) / kCenterRange;
  if (std::abs(rx) >= 1.0 || std::abs(ry) >= 1.0) {
    throw ParameterError("target needs a translation outside the generator's range");
  }
  const Eigen::Vector4d pre = spatial_preactivation(w0);
  Eigen::Vector4d delta = Eigen::Vector4d::Zero();
  delta(0) = std::atanh(rx) / kCenterGain - pre(0);
  delta(1) = std::atanh(ry) / kCenterGain - pre(1);
  const Eigen::VectorXd step = spatial_pinv_ * delta;
  Matrix out = w0.values;
  out.topRows(config_.edit_layers) += Eigen::Map<const Matrix>(step.data(), config_.edit_layers, config_.latent_dim);
  return LatentCode(std::move(out));
}

namespace {

Matrix latent_gradient(const ToyGenerator& g, const LatentCode& w, const Vec8& dparams) {
  const auto& cfg = g.config();
  const Eigen::Vector4d sp = g.spatial_preactivation(w);
  const SceneParams p = g.decode_params(w);
  const Vec8 slope = param_slopes(sp, p);
  Eigen::Vector4d gs, ga;
  for (int k = 0; k < 4; ++k) {
    gs(k) = dparams[static_cast<std::size_t>(k)] * slope[static_cast<std::size_t>(k)];
    ga(k) = dparams[static_cast<std::size_t>(4 + k)] * slope[static_cast<std::size_t>(4 + k)];
  }
  Matrix grad(cfg.layers, cfg.latent_dim);
  const Eigen::VectorXd ge = g.spatial_readout().transpose() * gs;
  const Eigen::VectorXd gr = g.appearance_readout().transpose() * ga;
  grad.topRows(cfg.edit_layers) = Eigen::Map<const Matrix>(ge.data(), cfg.edit_layers, cfg.latent_dim);
  grad.bottomRows(cfg.layers - cfg.edit_layers) =
      Eigen::Map<const Matrix>(gr.data(), cfg.layers - cfg.edit_layers, cfg.latent_dim);
  return grad;
}

}  // namespace

ag::Var ToyGenerator::feature_var(ag::Tape& tape, const ag::Var& latent) const {
  if (latent.rows() != config_.layers || latent.cols() != config_.latent_dim) {
    throw ShapeError("feature_var: latent shape mismatch");
  }
  FeatureMap fm = features(LatentCode(latent.value()));
  return tape.record(std::move(fm.cells), {latent}, [this, latent](ag::Tape& t, const Matrix& g, const Matrix&) {
    const LatentCode w(latent.value());
    const SceneParams p = decode_params(w);
    const int r = config_.feature_resolution;
    Vec8 dparams{};
    double f[8];
    std::array<Vec8, 8> df;
    for (int iy = 0; iy < r; ++iy) {
      for (int ix = 0; ix < r; ++ix) {
        const auto row = g.row(iy * r + ix);
        if (row.isZero(0.0)) continue;
        const Shade sh = shade(p, (ix + 0.5) / r, (iy + 0.5) / r, config_.edge_temperature, true);
        feature_values(p, sh, f, &df);
        for (int c = 0; c < 8; ++c) {
          const double gc = row(c);
          if (gc == 0.0) continue;
          for (int k = 0; k < 8; ++k) dparams[static_cast<std::size_t>(k)] += gc * df[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        }
      }
    }
    t.accumulate(latent, latent_gradient(*this, w, dparams));
  });
}

Matrix ToyGenerator::features_at(const LatentCode& w, const std::vector<Point>& points) const {
  const SceneParams p = decode_params(w);
  const double res = config_.image_resolution;
  Matrix out(static_cast<Eigen::Index>(points.size()), config_.feature_channels);
  double f[8];
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Shade sh = shade(p, points[i].x / res, points[i].y / res, config_.edge_temperature, false);
    feature_values(p, sh, f, nullptr);
    for (int c = 0; c < 8; ++c) out(static_cast<Eigen::Index>(i), c) = f[c];
  }
  return out;
}

ag::Var ToyGenerator::features_at_var(ag::Tape& tape, const ag::Var& latent, std::vector<Point> points) const {
  if (latent.rows() != config_.layers || latent.cols() != config_.latent_dim) {
    throw ShapeError("features_at_var: latent shape mismatch");
  }
  Matrix value = features_at(LatentCode(latent.value()), points);
  return tape.record(std::move(value), {latent},
                     [this, latent, points = std::move(points)](ag::Tape& t, const Matrix& g, const Matrix&) {
                       const LatentCode w(latent.value());
                       const SceneParams p = decode_params(w);
                       const double res = config_.image_resolution;
                       Vec8 dparams{};
                       double f[8];
                       std::array<Vec8, 8> df;
                       for (std::size_t i = 0; i < points.size(); ++i) {
                         const auto row = g.row(static_cast<Eigen::Index>(i));
                         if (row.isZero(0.0)) continue;
                         const Shade sh = shade(p, points[i].x / res, points[i].y / res, config_.edge_temperature, true);
                         feature_values(p, sh, f, &df);
                         for (int c = 0; c < 8; ++c) {
                           for (int k = 0; k < 8; ++k) {
                             dparams[static_cast<std::size_t>(k)] +=
                                 row(c) * df[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
                           }
                         }
                       }
                       t.accumulate(latent, latent_gradient(*this, w, dparams));
                     });
}

double ToyGenerator::mean_intensity(const LatentCode& w) const {
  const Image img = render(w);
  double s = 0.0;
  for (double v : img.rgb) s += v;
  return s / static_cast<double>(img.rgb.size());
}

Matrix ToyGenerator::mean_intensity_gradient(const LatentCode& w) const {
  const SceneParams p = decode_params(w);
  const int res = config_.image_resolution;
  Vec8 acc{};
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const Shade sh = shade(p, (x + 0.5) / res, (y + 0.5) / res, config_.edge_temperature, true);
      const double arg = kTexFreq * sh.u + p.texture_phase;
      const double tex = 0.5 + 0.5 * std::sin(arg);
      const double dtex = 0.5 * std::cos(arg);
      for (int c = 0; c < 3; ++c) {
        const double col = p.color[static_cast<std::size_t>(c)];
        for (int k = 0; k < 4; ++k) {
          acc[static_cast<std::size_t>(k)] += sh.dm[k] * (col * (kTexBase + kTexAmp * tex) - kBackground) +
                                              sh.m * col * kTexAmp * dtex * kTexFreq * sh.du[k];
        }
        acc[static_cast<std::size_t>(4 + c)] += sh.m * (kTexBase + kTexAmp * tex);
        acc[7] += sh.m * col * kTexAmp * dtex;
      }
    }
  }
  const double n = 3.0 * res * res;
  for (double& a : acc) a /= n;
  return latent_gradient(*this, w, acc);
}

}  // namespace autodrag
