// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "predictor/predictor.hpp"
#include "regularizer/regularizer.hpp"

#include <string>
#include <vector>

namespace autodrag {

inline constexpr const char* kConfigSchema = "autodrag.run_config/1";

struct InferenceConfig {
  int n_steps = 5;
  int rounds = 1;
  bool operator==(const InferenceConfig&) const = default;
};

struct EvaluationConfig {
  int landmark_trials = 200;
  std::vector<int> landmark_points{1, 5, 12};
  int paired_trials = 100;
  int paired_points = 32;
  int mdd_trials = 100;
  double drag_min = 30.0;
  double drag_max = 50.0;
  std::vector<int> ablation_n{1, 5};
  std::uint64_t seed = 424242;
  bool operator==(const EvaluationConfig&) const = default;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int session_ttl_seconds = 3600;
  bool operator==(const ServiceConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  GeneratorConfig generator;
  CorruptionSpec corruption;
  PerturbSpec perturb;
  RegularizerConfig regularizer;
  PredictorConfig predictor;
  Stage1Config stage1;
  Stage2Config stage2;
  InferenceConfig inference;
  EvaluationConfig evaluation;
  ServiceConfig service;
  std::string out_dir = "runs/default";

  // Copies shared settings (latent shape, corruption, perturbation) into the
  // per-stage configs and validates everything.
  void normalise();
  // Re-derives every training and initialisation seed from `seed`.
  void reseed(std::uint64_t seed);
  bool operator==(const RunConfig&) const = default;
};

std::string config_to_json(const RunConfig& config);
// sha256 of the canonical JSON text.
std::string config_hash(const RunConfig& config);
// Missing keys keep their defaults; unknown keys and a wrong schema are FormatErrors.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& config);

}  // namespace autodrag
