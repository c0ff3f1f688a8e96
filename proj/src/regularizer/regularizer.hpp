// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Latent regularizer: reconstructs the edit block of a corrupted latent code
// by cross-attention from queries built on the clean non-edit block to keys
// and values built on the corrupted edit block.

#pragma once

#include "autograd/tape.hpp"
#include "generator/toy_generator.hpp"
#include "latent/latent.hpp"
#include "nn/layers.hpp"

#include <functional>
#include <vector>

namespace autodrag {

struct RegularizerConfig {
  int layers = 12;
  int edit_layers = 6;
  int latent_dim = 64;
  int width = 64;
  int ffn_width = 128;
  int heads = 4;
  int encoder_layers = 6;
  int decoder_layers = 6;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const RegularizerConfig&) const = default;
};

class RegularizerModel {
 public:
  explicit RegularizerModel(const RegularizerConfig& config);
  RegularizerModel(const RegularizerModel&) = delete;
  RegularizerModel& operator=(const RegularizerModel&) = delete;

  const RegularizerConfig& config() const { return config_; }
  ag::ParameterStore& params() { return store_; }
  const ag::ParameterStore& params() const { return store_; }

  // latents stacks `batch` codes (batch * layers rows). Edit rows of the result
  // come from the decoder; all other rows are copies of the input rows.
  ag::Var forward(ag::Tape& t, const ag::Var& latents, int batch) const;

 private:
  RegularizerConfig config_;
  ag::ParameterStore store_;
  nn::Mlp key_mlp_, query_mlp_;
  ag::Parameter* token_mix_ = nullptr;  // edit_layers x (layers - edit_layers)
  ag::Parameter* position_ = nullptr;   // edit_layers x width
  nn::Encoder encoder_;
  nn::Decoder decoder_;
  nn::Linear head_;
};

LatentCode regularize(const RegularizerModel& model, const LatentCode& wprime, const EditLayerSpec& layers);

// Mean absolute difference over all entries.
double reg_loss(const LatentCode& w_hat, const LatentCode& w);

struct Stage1Config {
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 64;
  int samples_per_epoch = 1280;
  double grad_clip = 1.0;
  CorruptionSpec corruption;
  std::uint64_t seed = 7;

  void validate() const;
  bool operator==(const Stage1Config&) const = default;
};

struct Stage1Result {
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Trains in place. Throws TrainingError if the loss turns non-finite or
// exceeds ten times its first-epoch value.
Stage1Result train_stage1(const ToyGenerator& gen, RegularizerModel& model, const Stage1Config& config,
                          const EpochCallback& on_epoch = {});

struct DenoisingReport {
  double corrupted_l1 = 0.0;     // mean L1(w', w)
  double reconstructed_l1 = 0.0; // mean L1(regularize(w'), w)
  int samples = 0;
};

DenoisingReport evaluate_denoising(const ToyGenerator& gen, const RegularizerModel& model,
                                   const CorruptionSpec& corruption, int samples, std::uint64_t seed);

// Stacks codes row-wise into one matrix.
Matrix stack_latents(const std::vector<LatentCode>& codes);

}  // namespace autodrag
