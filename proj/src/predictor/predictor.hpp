// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Latent predictor: encodes the source feature map and the handle/target
// patches into a memory, then decodes the latent motion sequence step by step
// with causal self-attention. Predictions pass through the regularizer via a
// gated skip connection.

#pragma once

#include "correspondence/correspondence.hpp"
#include "regularizer/regularizer.hpp"

#include <optional>
#include <vector>

namespace autodrag {

struct PredictorConfig {
  int layers = 12;
  int edit_layers = 6;
  int latent_dim = 64;
  int image_resolution = 512;
  int feature_resolution = 32;
  int feature_channels = 8;
  int width = 64;
  int ffn_width = 128;
  int heads = 4;
  int conv_channels = 32;
  int encoder_layers = 6;
  int decoder_layers = 16;
  int max_positions = 16;
  int max_pairs = 32;
  std::uint64_t seed = 2;

  void validate() const;
  int conv_tokens() const { return (feature_resolution / 4) * (feature_resolution / 4); }
  bool operator==(const PredictorConfig&) const = default;
};

// Encoded cross-attention memory for a batch of samples.
struct Memory {
  ag::Var tokens;
  std::vector<int> offsets;
};

struct ContextInput {
  const FeatureMap* feature = nullptr;
  std::vector<PointPair> pairs;
};

class PredictorModel {
 public:
  explicit PredictorModel(const PredictorConfig& config);
  PredictorModel(const PredictorModel&) = delete;
  PredictorModel& operator=(const PredictorModel&) = delete;

  const PredictorConfig& config() const { return config_; }
  ag::ParameterStore& params() { return store_; }
  const ag::ParameterStore& params() const { return store_; }

  // More than max_pairs pairs are cut to the nearest max_pairs.
  Memory encode(ag::Tape& t, const std::vector<ContextInput>& inputs) const;

  // prefix: batch * n stacked full latents (sample-major). Returns batch * n
  // stacked full latents: step i + 1 predicted from prefix steps 0..i, with
  // non-edit rows copied from each sample's first prefix code. Without a
  // regularizer the gated skip is bypassed.
  ag::Var predict(ag::Tape& t, const Memory& memory, const ag::Var& prefix, int batch, int n,
                  const RegularizerModel* regularizer) const;

  // Weight of the regularizer branch in the skip connection.
  double skip_weight() const;

 private:
  PredictorConfig config_;
  ag::ParameterStore store_;
  ag::Parameter* conv1_w_ = nullptr;
  ag::Parameter* conv1_b_ = nullptr;
  ag::Parameter* conv2_w_ = nullptr;
  ag::Parameter* conv2_b_ = nullptr;
  nn::Mlp feature_mlp_, patch_mlp_, geometry_mlp_, memory_mlp_, query_mlp_;
  ag::Parameter* conv_position_ = nullptr;
  ag::Parameter* step_position_ = nullptr;
  nn::Encoder encoder_;
  nn::Decoder decoder_;
  nn::Linear head_;
  ag::Parameter* skip_gate_ = nullptr;
};

// Memory tokens for a single context (conv tokens followed by 2 per pair).
Matrix encode_context(const PredictorModel& model, const FeatureMap& feature, const std::vector<PointPair>& pairs);

// Teacher-forced prediction of w_1..w_n from the prefix w_0..w_{n-1}.
std::vector<LatentCode> predict_teacher_forced(const PredictorModel& model, const RegularizerModel* regularizer,
                                               const std::vector<LatentCode>& prefix, const FeatureMap& feature,
                                               const std::vector<PointPair>& pairs);

// Mean L1 over the n+1 codes of both sequences; element 0 is w_0 in both.
double pred_loss(const std::vector<LatentCode>& w_hat_seq, const LatentSequence& w_seq);
// predicted stacks w_hat_1..w_hat_n; w_0 contributes the zero term.
ag::Var pred_loss(ag::Tape& t, const ag::Var& predicted, const LatentSequence& w_seq);

// Per-step matches between ground-truth codes w_i and w_{i+1}, thinned evenly to max_pairs.
std::vector<std::vector<PointPair>> drag_matches(const Matcher& matcher, const LatentSequence& w_seq,
                                                 double min_distance, int max_pairs);

// Sum over steps and matched pairs of the L1 between the handle patch of F_i
// and the target patch of the feature map of predicted step i+1.
ag::Var drag_loss(ag::Tape& t, const ToyGenerator& gen, const ag::Var& predicted, const LatentSequence& w_seq,
                  const std::vector<std::vector<PointPair>>& matches);
double drag_loss(const ToyGenerator& gen, const LatentSequence& w_seq, const std::vector<LatentCode>& w_hat_seq,
                 const Matcher& matcher, double min_distance = 30.0, int max_pairs = 32);

double total_loss(double l_pred, double l_drag, double alpha, double beta);
ag::Var total_loss(const ag::Var& l_pred, const ag::Var& l_drag, double alpha, double beta);

struct Stage2Config {
  double lr_init = 1e-5;
  double lr_min = 1e-7;
  int cosine_period = 30;
  int epochs = 150;
  double alpha = 0.1;
  double beta = 1.0;
  int n = 5;
  double lambda = 0.05;
  double regularizer_lr = 1e-5;
  int batch_size = 16;
  int samples_per_epoch = 320;
  double sample_min_distance = 50.0;
  double drag_min_distance = 30.0;
  int max_pairs = 32;
  // Share of training sequences that stand still (anchor = w_0, zero-length pairs).
  double stationary_fraction = 0.1;
  double grad_clip = 1.0;
  bool use_regularizer = true;
  PerturbDirection direction = PerturbDirection::kAway;
  std::uint64_t seed = 11;

  void validate() const;
  bool operator==(const Stage2Config&) const = default;
};

struct Stage2Epoch {
  int epoch = 0;
  double l_pred = 0.0;
  double l_drag = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct Stage2Result {
  std::vector<Stage2Epoch> curve;
};

using Stage2Callback = std::function<void(const Stage2Epoch&)>;

// Joint training. The regularizer is fine-tuned unless use_regularizer is off.
// On a non-finite loss the parameters of the last completed epoch are restored
// and TrainingError is thrown.
Stage2Result train_stage2(const ToyGenerator& gen, PredictorModel& predictor, RegularizerModel& regularizer,
                          const Stage2Config& config, const Stage2Callback& on_epoch = {});

}  // namespace autodrag
