// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Latent-space primitives shared by both training stages: the extended
// latent code, the edit/non-edit layer split, corruption of the edit layers
// and perturbation-generated motion sequences.

#pragma once

#include "autograd/tape.hpp"
#include "util/random.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace autodrag {

using Matrix = ag::Matrix;

// One row per generator layer, one column per latent channel.
struct LatentCode {
  LatentCode() = default;
  explicit LatentCode(Matrix v);

  int layers() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
  bool finite() const { return values.allFinite(); }

  Matrix values;
};

struct EditLayerSpec {
  int edit_layer_count = 6;

  // Throws ShapeError when the split does not fit `layers`.
  void validate(int layers) const;
};

enum class MaskGranularity { kEntry, kLayer };

struct CorruptionSpec {
  double mask_prob = 0.25;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  MaskGranularity granularity = MaskGranularity::kEntry;

  void validate() const;
  bool operator==(const CorruptionSpec&) const = default;
};

// kAway is w_i = w_{i-1} - lambda (w* - w_{i-1}); kToward flips the sign.
enum class PerturbDirection { kAway, kToward };

struct PerturbSpec {
  double lambda = 0.05;
  int n = 5;
  std::uint64_t seed = 0;
  PerturbDirection direction = PerturbDirection::kAway;

  void validate() const;
  bool operator==(const PerturbSpec&) const = default;
};

struct LatentSequence {
  std::vector<LatentCode> codes;

  std::size_t size() const { return codes.size(); }
  const LatentCode& operator[](std::size_t i) const { return codes[i]; }
  const LatentCode& front() const { return codes.front(); }
  const LatentCode& back() const { return codes.back(); }
  // Checks equal shapes and that non-edit layers never change.
  void validate(const EditLayerSpec& layers) const;
};

struct Corruption {
  LatentCode corrupted;
  // 1 where the entry was kept, 0 where it was zeroed; non-edit rows are all 1.
  Matrix mask;
};

struct LayerSplit {
  Matrix edit;  // rows 0 .. edit_layer_count-1
  Matrix rest;  // remaining rows, possibly empty
};

struct MotionSequence {
  LatentSequence sequence;
  LatentCode anchor;  // the w* shared by every step
};

// Samples a latent code from the generator's mapping.
using LatentSampler = std::function<LatentCode(Rng&)>;

Corruption corrupt(const LatentCode& w, const EditLayerSpec& layers, const CorruptionSpec& spec);

LayerSplit split_layers(const LatentCode& w, const EditLayerSpec& layers);
LatentCode join_layers(const Matrix& edit, const Matrix& rest);

LatentCode perturb_step(const LatentCode& w_prev, const LatentCode& w_star, double lambda,
                        const EditLayerSpec& layers,
                        PerturbDirection direction = PerturbDirection::kAway);

// Iterates perturb_step n times from w0 with one fixed anchor.
LatentSequence motion_from_anchor(const LatentCode& w0, const LatentCode& w_star, double lambda, int n,
                                  const EditLayerSpec& layers,
                                  PerturbDirection direction = PerturbDirection::kAway);

// Draws the anchor from `mapping` using spec.seed, then iterates.
MotionSequence make_motion_sequence(const LatentCode& w0, const PerturbSpec& spec,
                                    const EditLayerSpec& layers, const LatentSampler& mapping);

// Lambda giving the same endpoint growth (1 + lambda)^n as (1 + reference_lambda)^reference_n.
double matched_lambda(double reference_lambda, int reference_n, int n);

}  // namespace autodrag
