// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "io/checkpoint.hpp"

namespace autodrag::testing {

// Tiny models on a 64 px image with a 16-cell feature grid.
inline RunConfig small_run_config() {
  RunConfig c;
  c.generator.image_resolution = 64;
  c.generator.feature_resolution = 16;
  c.regularizer.width = 16;
  c.regularizer.ffn_width = 32;
  c.regularizer.heads = 2;
  c.regularizer.encoder_layers = 1;
  c.regularizer.decoder_layers = 1;
  c.predictor.width = 16;
  c.predictor.ffn_width = 32;
  c.predictor.heads = 2;
  c.predictor.conv_channels = 4;
  c.predictor.encoder_layers = 1;
  c.predictor.decoder_layers = 2;
  c.stage1.epochs = 1;
  c.stage1.batch_size = 8;
  c.stage1.samples_per_epoch = 16;
  c.stage2.epochs = 1;
  c.stage2.batch_size = 2;
  c.stage2.samples_per_epoch = 4;
  c.stage2.sample_min_distance = 4.0;
  c.stage2.drag_min_distance = 2.0;
  c.evaluation.drag_min = 4.0;
  c.evaluation.drag_max = 8.0;
  c.normalise();
  return c;
}

}  // namespace autodrag::testing
