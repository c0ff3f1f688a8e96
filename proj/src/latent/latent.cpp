// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "latent/latent.hpp"

#include "errors.hpp"

#include <cmath>
#include <string>

namespace autodrag {

LatentCode::LatentCode(Matrix v) : values(std::move(v)) {
  if (!values.allFinite()) throw ParameterError("latent code has non-finite entries");
}

void EditLayerSpec::validate(int layers) const {
  if (edit_layer_count < 1 || edit_layer_count > layers) {
    throw ShapeError("edit_layer_count " + std::to_string(edit_layer_count) + " invalid for " +
                     std::to_string(layers) + " layers");
  }
}

void CorruptionSpec::validate() const {
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ParameterError("mask_prob must lie in [0, 1]");
  if (!(noise_std >= 0.0)) throw ParameterError("noise_std must be non-negative");
}

void PerturbSpec::validate() const {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (n < 1) throw ParameterError("sequence length n must be at least 1");
}

void LatentSequence::validate(const EditLayerSpec& layers) const {
  if (codes.empty()) throw ShapeError("empty latent sequence");
  const LatentCode& first = codes.front();
  layers.validate(first.layers());
  const int e = layers.edit_layer_count;
  for (const LatentCode& c : codes) {
    if (c.layers() != first.layers() || c.dim() != first.dim()) throw ShapeError("sequence shapes differ");
    if (c.values.bottomRows(first.layers() - e) != first.values.bottomRows(first.layers() - e)) {
      throw ShapeError("non-edit layers changed along the sequence");
    }
  }
}

Corruption corrupt(const LatentCode& w, const EditLayerSpec& layers, const CorruptionSpec& spec) {
  spec.validate();
  layers.validate(w.layers());
  Rng rng(spec.seed);
  std::bernoulli_distribution drop(spec.mask_prob);
  std::normal_distribution<double> noise(0.0, 1.0);

  const int e = layers.edit_layer_count;
  Matrix out = w.values;
  Matrix mask = Matrix::Ones(w.layers(), w.dim());
  for (int r = 0; r < e; ++r) {
    bool layer_dropped = spec.granularity == MaskGranularity::kLayer && drop(rng);
    for (int c = 0; c < w.dim(); ++c) {
      const bool dropped = spec.granularity == MaskGranularity::kEntry ? drop(rng) : layer_dropped;
      if (dropped) mask(r, c) = 0.0;
    }
  }
  for (int r = 0; r < e; ++r) {
    for (int c = 0; c < w.dim(); ++c) {
      out(r, c) = out(r, c) * mask(r, c) + (spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0);
    }
  }
  return Corruption{LatentCode(std::move(out)), std::move(mask)};
}

LayerSplit split_layers(const LatentCode& w, const EditLayerSpec& layers) {
  layers.validate(w.layers());
  const int e = layers.edit_layer_count;
  return LayerSplit{w.values.topRows(e), w.values.bottomRows(w.layers() - e)};
}

LatentCode join_layers(const Matrix& edit, const Matrix& rest) {
  if (rest.rows() > 0 && rest.cols() != edit.cols()) throw ShapeError("layer blocks differ in width");
  Matrix out(edit.rows() + rest.rows(), edit.cols());
  out.topRows(edit.rows()) = edit;
  if (rest.rows() > 0) out.bottomRows(rest.rows()) = rest;
  return LatentCode(std::move(out));
}

LatentCode perturb_step(const LatentCode& w_prev, const LatentCode& w_star, double lambda,
                        const EditLayerSpec& layers, PerturbDirection direction) {
  if (w_prev.layers() != w_star.layers() || w_prev.dim() != w_star.dim()) {
    throw ShapeError("perturb_step: latent shapes differ");
  }
  layers.validate(w_prev.layers());
  const int e = layers.edit_layer_count;
  Matrix out = w_prev.values;
  const auto prev = w_prev.values.topRows(e);
  const auto star = w_star.values.topRows(e);
  if (direction == PerturbDirection::kAway) {
    out.topRows(e) = prev - lambda * (star - prev);
  } else {
    out.topRows(e) = prev + lambda * (star - prev);
  }
  return LatentCode(std::move(out));
}

LatentSequence motion_from_anchor(const LatentCode& w0, const LatentCode& w_star, double lambda, int n,
                                  const EditLayerSpec& layers, PerturbDirection direction) {
  if (n < 1) throw ParameterError("sequence length n must be at least 1");
  LatentSequence seq;
  seq.codes.reserve(static_cast<std::size_t>(n) + 1);
  seq.codes.push_back(w0);
  for (int i = 1; i <= n; ++i) seq.codes.push_back(perturb_step(seq.codes.back(), w_star, lambda, layers, direction));
  return seq;
}

MotionSequence make_motion_sequence(const LatentCode& w0, const PerturbSpec& spec, const EditLayerSpec& layers,
                                    const LatentSampler& mapping) {
  spec.validate();
  Rng rng(spec.seed);
  LatentCode anchor = mapping(rng);
  LatentSequence seq = motion_from_anchor(w0, anchor, spec.lambda, spec.n, layers, spec.direction);
  return MotionSequence{std::move(seq), std::move(anchor)};
}

double matched_lambda(double reference_lambda, int reference_n, int n) {
  if (n < 1 || reference_n < 1) throw ParameterError("sequence lengths must be at least 1");
  return std::pow(1.0 + reference_lambda, static_cast<double>(reference_n) / n) - 1.0;
}

}  // namespace autodrag
