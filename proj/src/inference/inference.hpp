// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Single-pass drag editing: roll the predictor out from w_0, feeding each
// prediction back as the next query. No latent optimisation takes place.

#pragma once

#include "correspondence/correspondence.hpp"
#include "predictor/predictor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace autodrag {

struct EditModels {
  const ToyGenerator* generator = nullptr;
  const PredictorModel* predictor = nullptr;
  // nullptr runs the predictor without its regularizer branch.
  const RegularizerModel* regularizer = nullptr;
};

struct EditRequest {
  LatentCode w0;
  std::vector<PointPair> pairs;
  int n_steps = 5;
  int rounds = 1;
  // Keep every step image; otherwise only the final one is rendered.
  bool keep_step_images = true;
};

struct EditResult {
  LatentCode w_final;
  LatentSequence trajectory;  // w0 then every rolled-out step
  std::vector<Image> images;
  std::vector<double> md_curve;   // mean handle-target distance per step, px
  std::vector<double> mdd_curve;  // md_curve / md_curve[0]; all 1 for a zero drag
  double wall_time = 0.0;         // seconds
  std::uint64_t synthesis_calls = 0;
  std::uint64_t gradient_evaluations = 0;
};

// Current image positions of the material points that sat under `handles` in w0.
std::vector<Point> track_handles(const ToyGenerator& gen, const LatentCode& w0, const std::vector<Point>& handles,
                                 const LatentCode& w);

EditResult edit(const EditModels& models, const EditRequest& request);

// Writes trajectory.bin, step_###.png, mdd.csv and meta into `dir`.
void save_edit_result(const EditResult& result, const std::string& dir);

}  // namespace autodrag
