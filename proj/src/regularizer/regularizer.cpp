// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "regularizer/regularizer.hpp"

#include "autograd/ops.hpp"
#include "autograd/optim.hpp"
#include "errors.hpp"

#include <cmath>
#include <sstream>

namespace autodrag {

void RegularizerConfig::validate() const {
  if (layers < 2 || latent_dim < 1) throw ParameterError("regularizer: bad latent shape");
  if (edit_layers < 1 || edit_layers >= layers) {
    throw ParameterError("regularizer: needs at least one edit and one non-edit layer");
  }
  if (width < 1 || ffn_width < 1 || heads < 1 || width % heads != 0) {
    throw ParameterError("regularizer: width must be a positive multiple of heads");
  }
  if (encoder_layers < 1 || decoder_layers < 1) throw ParameterError("regularizer: need at least one layer");
}

RegularizerModel::RegularizerModel(const RegularizerConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  nn::ParamBuilder b(store_, rng);
  const nn::TransformerDims dims{config_.width, config_.ffn_width, config_.heads};
  const int rest = config_.layers - config_.edit_layers;
  key_mlp_ = nn::Mlp(b.scoped("key_mlp"), config_.latent_dim, config_.width, config_.width);
  query_mlp_ = nn::Mlp(b.scoped("query_mlp"), config_.latent_dim, config_.width, config_.width);
  token_mix_ = &b.uniform("token_mix", config_.edit_layers, rest, rest);
  position_ = &b.normal("position", config_.edit_layers, config_.width, 0.02);
  encoder_ = nn::Encoder(b.scoped("encoder"), dims, config_.encoder_layers);
  decoder_ = nn::Decoder(b.scoped("decoder"), dims, config_.decoder_layers);
  head_ = nn::Linear(b.scoped("head"), config_.width, config_.latent_dim);
}

ag::Var RegularizerModel::forward(ag::Tape& t, const ag::Var& latents, int batch) const {
  const int l = config_.layers;
  const int e = config_.edit_layers;
  if (batch < 1 || latents.rows() != static_cast<Eigen::Index>(batch) * l || latents.cols() != config_.latent_dim) {
    throw ShapeError("regularizer: expected " + std::to_string(batch) + " stacked " + std::to_string(l) + "x" +
                     std::to_string(config_.latent_dim) + " codes");
  }
  std::vector<int> edit_rows, rest_rows, pos_rows, offsets;
  for (int b = 0; b < batch; ++b) {
    offsets.push_back(b * e);
    for (int i = 0; i < e; ++i) {
      edit_rows.push_back(b * l + i);
      pos_rows.push_back(i);
    }
    for (int i = e; i < l; ++i) rest_rows.push_back(b * l + i);
  }
  offsets.push_back(batch * e);

  ag::Var memory = encoder_(t, key_mlp_(t, ag::gather_rows(latents, edit_rows)), offsets);
  ag::Var queries = query_mlp_(t, ag::gather_rows(latents, rest_rows));
  queries = ag::batched_left_matmul(t.param(*token_mix_), queries, batch);
  queries = ag::add(queries, ag::gather_rows(t.param(*position_), pos_rows));
  ag::Var decoded = head_(t, decoder_(t, queries, memory, offsets, offsets, false));

  // Reassemble: decoded edit rows, original non-edit rows.
  const int decoded_rows = batch * e;
  std::vector<int> assemble;
  assemble.reserve(static_cast<std::size_t>(batch) * l);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < l; ++i) assemble.push_back(i < e ? b * e + i : decoded_rows + b * l + i);
  }
  std::vector<ag::Var> parts{decoded, latents};
  return ag::gather_rows(ag::concat_rows(parts), std::move(assemble));
}

LatentCode regularize(const RegularizerModel& model, const LatentCode& wprime, const EditLayerSpec& layers) {
  const RegularizerConfig& c = model.config();
  if (layers.edit_layer_count != c.edit_layers) throw ShapeError("regularizer trained for a different layer split");
  if (wprime.layers() != c.layers || wprime.dim() != c.latent_dim) throw ShapeError("regularizer: latent shape mismatch");
  ag::Tape t(false);
  return LatentCode(model.forward(t, t.constant(wprime.values), 1).value());
}

double reg_loss(const LatentCode& w_hat, const LatentCode& w) {
  if (w_hat.layers() != w.layers() || w_hat.dim() != w.dim()) throw ShapeError("reg_loss: shape mismatch");
  return (w_hat.values - w.values).cwiseAbs().mean();
}

Matrix stack_latents(const std::vector<LatentCode>& codes) {
  if (codes.empty()) throw ShapeError("nothing to stack");
  Matrix out(static_cast<Eigen::Index>(codes.size()) * codes[0].layers(), codes[0].dim());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].layers() != codes[0].layers() || codes[i].dim() != codes[0].dim()) {
      throw ShapeError("stack_latents: shapes differ");
    }
    out.middleRows(static_cast<Eigen::Index>(i) * codes[0].layers(), codes[0].layers()) = codes[i].values;
  }
  return out;
}

void Stage1Config::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("stage 1 learning_rate must be positive");
  if (epochs < 1) throw ParameterError("stage 1 epochs must be >= 1");
  if (batch_size < 1 || samples_per_epoch < batch_size) {
    throw ParameterError("stage 1 needs batch_size >= 1 and samples_per_epoch >= batch_size");
  }
  corruption.validate();
}

namespace {

struct Batch {
  Matrix clean;
  Matrix corrupted;
};

Batch make_batch(const ToyGenerator& gen, const CorruptionSpec& spec, int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LatentCode> clean, noisy;
  for (int i = 0; i < size; ++i) {
    clean.push_back(gen.sample_latent(rng));
    CorruptionSpec s = spec;
    s.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    noisy.push_back(corrupt(clean.back(), gen.edit_spec(), s).corrupted);
  }
  return Batch{stack_latents(clean), stack_latents(noisy)};
}

}  // namespace

Stage1Result train_stage1(const ToyGenerator& gen, RegularizerModel& model, const Stage1Config& config,
                          const EpochCallback& on_epoch) {
  config.validate();
  const RegularizerConfig& mc = model.config();
  if (mc.layers != gen.config().layers || mc.edit_layers != gen.config().edit_layers ||
      mc.latent_dim != gen.config().latent_dim) {
    throw ShapeError("regularizer and generator latent shapes differ");
  }
  auto params = model.params().all();
  ag::Adam adam(params);
  Stage1Result result;
  const int steps = config.samples_per_epoch / config.batch_size;
  std::uint64_t step_id = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (int s = 0; s < steps; ++s, ++step_id) {
      const Batch batch = make_batch(gen, config.corruption, config.batch_size, derive_seed(config.seed, step_id));
      adam.zero_grad();
      ag::Tape t;
      ag::Var out = model.forward(t, t.constant(batch.corrupted), config.batch_size);
      ag::Var loss = ag::l1_mean(out, t.constant(batch.clean));
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingError("stage 1: non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(s));
      }
      t.backward(loss);
      ag::clip_grad_norm(params, config.grad_clip);
      adam.step(config.learning_rate);
      total += value;
    }
    const double mean = total / steps;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
    if (mean > 10.0 * result.epoch_loss.front()) {
      std::ostringstream msg;
      msg << "stage 1 diverged: epoch " << epoch << " loss " << mean << " vs first epoch " << result.epoch_loss.front();
      throw TrainingError(msg.str());
    }
  }
  return result;
}

DenoisingReport evaluate_denoising(const ToyGenerator& gen, const RegularizerModel& model,
                                   const CorruptionSpec& corruption, int samples, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("need at least one evaluation sample");
  DenoisingReport rep;
  rep.samples = samples;
  constexpr int kChunk = 64;
  for (int start = 0; start < samples; start += kChunk) {
    const int n = std::min(kChunk, samples - start);
    const Batch batch = make_batch(gen, corruption, n, derive_seed(seed, static_cast<std::uint64_t>(start)));
    ag::Tape t(false);
    const Matrix out = model.forward(t, t.constant(batch.corrupted), n).value();
    rep.corrupted_l1 += (batch.corrupted - batch.clean).cwiseAbs().sum();
    rep.reconstructed_l1 += (out - batch.clean).cwiseAbs().sum();
  }
  const double count = static_cast<double>(samples) * gen.config().layers * gen.config().latent_dim;
  rep.corrupted_l1 /= count;
  rep.reconstructed_l1 /= count;
  return rep;
}

}  // namespace autodrag
