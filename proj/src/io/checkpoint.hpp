// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint: magic, semantic version, run config (JSON text) and a
// list of named matrices holding the generator weights and, when trained,
// the regularizer and predictor parameters.

#pragma once

#include "io/config.hpp"

#include <memory>
#include <string>

namespace autodrag {

inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'R', 'G', 'C', 'K', 'P', 'T'};
inline constexpr int kCheckpointVersion[3] = {1, 0, 0};

struct ModelBundle {
  RunConfig config;
  std::unique_ptr<ToyGenerator> generator;
  std::unique_ptr<RegularizerModel> regularizer;
  std::unique_ptr<PredictorModel> predictor;

  // Fresh generator and untrained models for a config.
  static ModelBundle create(const RunConfig& config, bool with_regularizer, bool with_predictor);
};

std::string serialize_checkpoint(const ModelBundle& bundle);
ModelBundle deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const ModelBundle& bundle);
ModelBundle load_checkpoint(const std::string& path);

}  // namespace autodrag
