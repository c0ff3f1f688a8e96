// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "predictor/predictor.hpp"

#include "autograd/ops.hpp"
#include "autograd/optim.hpp"
#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace autodrag {

namespace {

constexpr int kGeometry = 5;
constexpr double kDisplacementGain = 16.0;
// The regularizer branch starts mostly closed: sigmoid(-2) ~ 0.12.
constexpr double kSkipGateInit = -2.0;

// im2col rows for a 3x3, stride-2, pad-1 convolution over `batch` stacked grids.
std::vector<int> conv_table(int batch, int in_res) {
  const int out_res = in_res / 2;
  std::vector<int> table;
  table.reserve(static_cast<std::size_t>(batch) * out_res * out_res * 9);
  for (int b = 0; b < batch; ++b) {
    for (int oy = 0; oy < out_res; ++oy) {
      for (int ox = 0; ox < out_res; ++ox) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int y = 2 * oy + ky - 1;
            const int x = 2 * ox + kx - 1;
            const bool inside = x >= 0 && y >= 0 && x < in_res && y < in_res;
            table.push_back(inside ? b * in_res * in_res + y * in_res + x : -1);
          }
        }
      }
    }
  }
  return table;
}

double normalised(double v, int res) { return 2.0 * v / res - 1.0; }

void patch_token(const FeatureMap& f, const Point& own, const Point& partner, double role, int res,
                 Eigen::Ref<Eigen::RowVectorXd> patch, Eigen::Ref<Eigen::RowVectorXd> geometry) {
  const Patch p = extract_patch(f, own, res);
  patch = Eigen::Map<const Eigen::RowVectorXd>(p.values.data(), p.values.size());
  geometry(0) = normalised(own.x, res);
  geometry(1) = normalised(own.y, res);
  geometry(2) = kDisplacementGain * (partner.x - own.x) / res;
  geometry(3) = kDisplacementGain * (partner.y - own.y) / res;
  geometry(4) = role;
}

std::vector<PointPair> capped(std::vector<PointPair> pairs, int max_pairs) {
  if (static_cast<int>(pairs.size()) > max_pairs) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const PointPair& a, const PointPair& b) { return a.distance() < b.distance(); });
    pairs.resize(static_cast<std::size_t>(max_pairs));
  }
  return pairs;
}

}  // namespace

void PredictorConfig::validate() const {
  if (layers < 2 || edit_layers < 1 || edit_layers >= layers || latent_dim < 1) {
    throw ParameterError("predictor: bad latent shape");
  }
  if (feature_resolution < 4 || feature_resolution % 4 != 0) {
    throw ParameterError("predictor: feature_resolution must be a positive multiple of 4");
  }
  if (image_resolution < feature_resolution) throw ParameterError("predictor: image smaller than feature grid");
  if (width < 1 || heads < 1 || width % heads != 0) throw ParameterError("predictor: width must be a multiple of heads");
  if (encoder_layers < 1 || decoder_layers < 1 || conv_channels < 1 || feature_channels < 1) {
    throw ParameterError("predictor: layer counts must be positive");
  }
  if (max_positions < 1 || max_pairs < 1) throw ParameterError("predictor: max_positions and max_pairs must be positive");
}

PredictorModel::PredictorModel(const PredictorConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  nn::ParamBuilder b(store_, rng);
  const nn::TransformerDims dims{config_.width, config_.ffn_width, config_.heads};
  const int c = config_.feature_channels;
  const int cc = config_.conv_channels;
  const int edit_width = config_.edit_layers * config_.latent_dim;
  conv1_w_ = &b.uniform("conv1.weight", 9 * c, cc, 9.0 * c);
  conv1_b_ = &b.constant("conv1.bias", 1, cc, 0.0);
  conv2_w_ = &b.uniform("conv2.weight", 9 * cc, cc, 9.0 * cc);
  conv2_b_ = &b.constant("conv2.bias", 1, cc, 0.0);
  feature_mlp_ = nn::Mlp(b.scoped("feature_mlp"), cc, config_.width, config_.width);
  conv_position_ = &b.normal("conv_position", config_.conv_tokens(), config_.width, 0.02);
  patch_mlp_ = nn::Mlp(b.scoped("patch_mlp"), kPatchCells * c, config_.width, config_.width);
  geometry_mlp_ = nn::Mlp(b.scoped("geometry_mlp"), kGeometry, config_.width, config_.width);
  memory_mlp_ = nn::Mlp(b.scoped("memory_mlp"), config_.width, config_.width, config_.width);
  encoder_ = nn::Encoder(b.scoped("encoder"), dims, config_.encoder_layers);
  query_mlp_ = nn::Mlp(b.scoped("query_mlp"), edit_width, config_.width, config_.width);
  step_position_ = &b.normal("step_position", config_.max_positions, config_.width, 0.02);
  decoder_ = nn::Decoder(b.scoped("decoder"), dims, config_.decoder_layers);
  head_ = nn::Linear(b.scoped("head"), config_.width, edit_width, 0.1);
  skip_gate_ = &b.constant("skip_gate", 1, 1, kSkipGateInit);
}

double PredictorModel::skip_weight() const { return 1.0 / (1.0 + std::exp(-skip_gate_->value(0, 0))); }

Memory PredictorModel::encode(ag::Tape& t, const std::vector<ContextInput>& inputs) const {
  if (inputs.empty()) throw ParameterError("encode: empty batch");
  const int batch = static_cast<int>(inputs.size());
  const int res = config_.feature_resolution;
  const int c = config_.feature_channels;
  const int tokens = config_.conv_tokens();

  Matrix features(static_cast<Eigen::Index>(batch) * res * res, c);
  std::vector<std::vector<PointPair>> pairs;
  int pair_tokens = 0;
  for (int b = 0; b < batch; ++b) {
    const FeatureMap* f = inputs[static_cast<std::size_t>(b)].feature;
    if (f == nullptr || f->resolution != res || f->channels != c) throw ShapeError("encode: feature map shape mismatch");
    if (inputs[static_cast<std::size_t>(b)].pairs.empty()) throw ParameterError("encode: at least one point pair is required");
    features.middleRows(static_cast<Eigen::Index>(b) * res * res, res * res) = f->cells;
    pairs.push_back(capped(inputs[static_cast<std::size_t>(b)].pairs, config_.max_pairs));
    pair_tokens += 2 * static_cast<int>(pairs.back().size());
  }

  // Patch contents and point geometry (position, offset to the partner, role) are embedded separately.
  Matrix patch_in(pair_tokens, kPatchCells * c);
  Matrix geometry_in(pair_tokens, kGeometry);
  int row = 0;
  for (int b = 0; b < batch; ++b) {
    const FeatureMap& f = *inputs[static_cast<std::size_t>(b)].feature;
    for (const PointPair& p : pairs[static_cast<std::size_t>(b)]) {
      patch_token(f, p.handle, p.target, 1.0, config_.image_resolution, patch_in.row(row), geometry_in.row(row));
      ++row;
      patch_token(f, p.target, p.handle, -1.0, config_.image_resolution, patch_in.row(row), geometry_in.row(row));
      ++row;
    }
  }

  ag::Var x = t.constant(std::move(features));
  x = ag::gelu(ag::linear(ag::gather_taps(x, conv_table(batch, res), 9), t.param(*conv1_w_), t.param(*conv1_b_)));
  x = ag::gelu(ag::linear(ag::gather_taps(x, conv_table(batch, res / 2), 9), t.param(*conv2_w_), t.param(*conv2_b_)));
  std::vector<int> pos_rows;
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < tokens; ++i) pos_rows.push_back(i);
  }
  ag::Var conv_tokens = ag::add(feature_mlp_(t, x), ag::gather_rows(t.param(*conv_position_), pos_rows));
  ag::Var patch_tokens = ag::add(patch_mlp_(t, t.constant(std::move(patch_in))),
                                 geometry_mlp_(t, t.constant(std::move(geometry_in))));

  // Interleave per sample: conv tokens, then that sample's pair tokens.
  const int conv_total = batch * tokens;
  std::vector<int> order;
  Memory mem;
  int pair_row = 0;
  for (int b = 0; b < batch; ++b) {
    mem.offsets.push_back(static_cast<int>(order.size()));
    for (int i = 0; i < tokens; ++i) order.push_back(b * tokens + i);
    const int k = 2 * static_cast<int>(pairs[static_cast<std::size_t>(b)].size());
    for (int i = 0; i < k; ++i) order.push_back(conv_total + pair_row + i);
    pair_row += k;
  }
  mem.offsets.push_back(static_cast<int>(order.size()));
  std::vector<ag::Var> parts{conv_tokens, patch_tokens};
  ag::Var tokens_all = memory_mlp_(t, ag::gather_rows(ag::concat_rows(parts), std::move(order)));
  mem.tokens = encoder_(t, tokens_all, mem.offsets);
  return mem;
}

ag::Var PredictorModel::predict(ag::Tape& t, const Memory& memory, const ag::Var& prefix, int batch, int n,
                                const RegularizerModel* regularizer) const {
  const int l = config_.layers;
  const int e = config_.edit_layers;
  const int d = config_.latent_dim;
  if (n < 1 || n > config_.max_positions) {
    throw ShapeError("predict: prefix length " + std::to_string(n) + " outside [1, " +
                     std::to_string(config_.max_positions) + "]");
  }
  if (batch < 1 || static_cast<int>(memory.offsets.size()) != batch + 1) throw ShapeError("predict: memory batch mismatch");
  if (prefix.rows() != static_cast<Eigen::Index>(batch) * n * l || prefix.cols() != d) {
    throw ShapeError("predict: prefix must stack batch * n latent codes");
  }
  const int codes = batch * n;
  std::vector<int> edit_rows, pos_rows, q_offsets;
  for (int s = 0; s < codes; ++s) {
    for (int i = 0; i < e; ++i) edit_rows.push_back(s * l + i);
  }
  for (int b = 0; b < batch; ++b) {
    q_offsets.push_back(b * n);
    for (int i = 0; i < n; ++i) pos_rows.push_back(i);
  }
  q_offsets.push_back(codes);

  ag::Var prefix_edit = ag::reshape(ag::gather_rows(prefix, edit_rows), codes, e * d);
  ag::Var q = ag::add(query_mlp_(t, prefix_edit), ag::gather_rows(t.param(*step_position_), pos_rows));
  ag::Var h = decoder_(t, q, memory.tokens, q_offsets, memory.offsets, true);
  ag::Var next_edit = ag::reshape(ag::add(prefix_edit, head_(t, h)), codes * e, d);

  // Assemble full codes: predicted edit rows, non-edit rows of each sample's w_0.
  std::vector<int> assemble;
  assemble.reserve(static_cast<std::size_t>(codes) * l);
  const int edit_total = codes * e;
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < n; ++i) {
      const int s = b * n + i;
      for (int r = 0; r < l; ++r) assemble.push_back(r < e ? s * e + r : edit_total + (b * n) * l + r);
    }
  }
  std::vector<ag::Var> parts{next_edit, prefix};
  ag::Var x = ag::gather_rows(ag::concat_rows(parts), std::move(assemble));
  if (regularizer == nullptr) return x;
  ag::Var refined = regularizer->forward(t, x, codes);
  ag::Var gate = ag::sigmoid(t.param(*skip_gate_));
  return ag::add(x, ag::scale_by(ag::sub(refined, x), gate));
}

Matrix encode_context(const PredictorModel& model, const FeatureMap& feature, const std::vector<PointPair>& pairs) {
  ag::Tape t(false);
  return model.encode(t, {ContextInput{&feature, pairs}}).tokens.value();
}

std::vector<LatentCode> predict_teacher_forced(const PredictorModel& model, const RegularizerModel* regularizer,
                                               const std::vector<LatentCode>& prefix, const FeatureMap& feature,
                                               const std::vector<PointPair>& pairs) {
  if (prefix.empty()) throw ShapeError("predict_teacher_forced: empty prefix");
  ag::Tape t(false);
  const Memory mem = model.encode(t, {ContextInput{&feature, pairs}});
  const int n = static_cast<int>(prefix.size());
  const Matrix out = model.predict(t, mem, t.constant(stack_latents(prefix)), 1, n, regularizer).value();
  const int l = prefix[0].layers();
  std::vector<LatentCode> result;
  for (int i = 0; i < n; ++i) result.emplace_back(out.middleRows(static_cast<Eigen::Index>(i) * l, l));
  return result;
}

double pred_loss(const std::vector<LatentCode>& w_hat_seq, const LatentSequence& w_seq) {
  if (w_hat_seq.size() != w_seq.size() || w_seq.size() < 1) throw ShapeError("pred_loss: sequence lengths differ");
  double total = 0.0;
  for (std::size_t i = 0; i < w_seq.size(); ++i) total += reg_loss(w_hat_seq[i], w_seq[i]);
  return total / static_cast<double>(w_seq.size());
}

ag::Var pred_loss(ag::Tape& t, const ag::Var& predicted, const LatentSequence& w_seq) {
  if (w_seq.size() < 2) throw ShapeError("pred_loss: sequence needs at least two codes");
  const int n = static_cast<int>(w_seq.size()) - 1;
  std::vector<LatentCode> truth(w_seq.codes.begin() + 1, w_seq.codes.end());
  const Matrix target = stack_latents(truth);
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw ShapeError("pred_loss: prediction does not stack n codes");
  }
  return ag::scale(ag::l1_sum(predicted, t.constant(target)), 1.0 / (static_cast<double>(n + 1) * target.size() / n));
}

std::vector<std::vector<PointPair>> drag_matches(const Matcher& matcher, const LatentSequence& w_seq,
                                                 double min_distance, int max_pairs) {
  std::vector<std::vector<PointPair>> out;
  for (std::size_t i = 0; i + 1 < w_seq.size(); ++i) {
    std::vector<PointPair> m = matcher.match(w_seq[i], w_seq[i + 1], min_distance);
    if (static_cast<int>(m.size()) > max_pairs) {
      std::vector<PointPair> kept;
      for (int k = 0; k < max_pairs; ++k) kept.push_back(m[m.size() * static_cast<std::size_t>(k) / static_cast<std::size_t>(max_pairs)]);
      m = std::move(kept);
    }
    out.push_back(std::move(m));
  }
  return out;
}

ag::Var drag_loss(ag::Tape& t, const ToyGenerator& gen, const ag::Var& predicted, const LatentSequence& w_seq,
                  const std::vector<std::vector<PointPair>>& matches) {
  const int l = gen.config().layers;
  const int res = gen.image_resolution();
  const int fres = gen.config().feature_resolution;
  if (matches.size() + 1 != w_seq.size()) throw ShapeError("drag_loss: one match list per step expected");
  if (predicted.rows() != static_cast<Eigen::Index>(matches.size()) * l) throw ShapeError("drag_loss: prediction length");
  ag::Var total = t.constant(Matrix::Zero(1, 1));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto& m = matches[i];
    if (m.empty()) continue;
    std::vector<Point> handles, targets;
    for (const PointPair& p : m) {
      const auto h = patch_points(p.handle, res, fres);
      const auto g = patch_points(p.target, res, fres);
      handles.insert(handles.end(), h.begin(), h.end());
      targets.insert(targets.end(), g.begin(), g.end());
    }
    Matrix source = gen.features_at(w_seq[i], handles);
    ag::Var moved = gen.features_at_var(t, ag::slice_rows(predicted, static_cast<Eigen::Index>(i) * l, l), std::move(targets));
    total = ag::add(total, ag::l1_sum(moved, t.constant(std::move(source))));
  }
  return total;
}

double drag_loss(const ToyGenerator& gen, const LatentSequence& w_seq, const std::vector<LatentCode>& w_hat_seq,
                 const Matcher& matcher, double min_distance, int max_pairs) {
  if (w_hat_seq.size() != w_seq.size()) throw ShapeError("drag_loss: sequence lengths differ");
  ag::Tape t(false);
  std::vector<LatentCode> predicted(w_hat_seq.begin() + 1, w_hat_seq.end());
  if (predicted.empty()) return 0.0;
  return drag_loss(t, gen, t.constant(stack_latents(predicted)), w_seq, drag_matches(matcher, w_seq, min_distance, max_pairs))
      .value()(0, 0);
}

double total_loss(double l_pred, double l_drag, double alpha, double beta) { return alpha * l_pred + beta * l_drag; }

ag::Var total_loss(const ag::Var& l_pred, const ag::Var& l_drag, double alpha, double beta) {
  return ag::add(ag::scale(l_pred, alpha), ag::scale(l_drag, beta));
}

void Stage2Config::validate() const {
  if (!(lr_init > 0.0) || !(lr_min >= 0.0) || lr_min > lr_init) throw ParameterError("stage 2: need 0 <= lr_min <= lr_init");
  if (cosine_period < 1) throw ParameterError("stage 2: cosine_period must be >= 1");
  if (epochs < 1) throw ParameterError("stage 2: epochs must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ParameterError("stage 2: alpha and beta must be non-negative");
  if (n < 1) throw ParameterError("stage 2: n must be >= 1");
  if (!(lambda > 0.0)) throw ParameterError("stage 2: lambda must be positive");
  if (!(regularizer_lr >= 0.0)) throw ParameterError("stage 2: regularizer_lr must be non-negative");
  if (batch_size < 1 || samples_per_epoch < batch_size) throw ParameterError("stage 2: bad batch_size / samples_per_epoch");
  if (max_pairs < 1) throw ParameterError("stage 2: max_pairs must be positive");
  if (!(stationary_fraction >= 0.0 && stationary_fraction <= 1.0)) {
    throw ParameterError("stage 2: stationary_fraction must lie in [0, 1]");
  }
}

namespace {

struct TrainSample {
  LatentSequence seq;
  FeatureMap f0;
  std::vector<PointPair> pairs;
  std::vector<std::vector<PointPair>> steps;
};

std::vector<PointPair> random_subset(std::vector<PointPair> pairs, int max_pairs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, std::log(max_pairs + 1.0));
  const int k = std::clamp(static_cast<int>(std::exp(u(rng))), 1, max_pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  if (static_cast<int>(pairs.size()) > k) pairs.resize(static_cast<std::size_t>(k));
  return pairs;
}

TrainSample draw_sample(const ToyGenerator& gen, const Matcher& matcher, const Stage2Config& cfg, Rng& rng) {
  std::bernoulli_distribution still(cfg.stationary_fraction);
  TrainSample s;
  const EditLayerSpec layers = gen.edit_spec();
  for (int attempt = 0; attempt < 50; ++attempt) {
    const LatentCode w0 = gen.sample_latent(rng);
    if (still(rng)) {
      s.seq = motion_from_anchor(w0, w0, cfg.lambda, cfg.n, layers, cfg.direction);
      std::vector<PointPair> zero = matcher.match(w0, w0, -1.0);
      if (zero.empty()) continue;
      s.pairs = random_subset(std::move(zero), cfg.max_pairs, rng);
    } else {
      const LatentCode anchor = gen.sample_latent(rng);
      s.seq = motion_from_anchor(w0, anchor, cfg.lambda, cfg.n, layers, cfg.direction);
      std::vector<PointPair> pairs = matcher.match(w0, s.seq.back(), cfg.sample_min_distance);
      if (pairs.empty()) continue;
      s.pairs = random_subset(std::move(pairs), cfg.max_pairs, rng);
    }
    s.f0 = gen.features(w0);
    s.steps = drag_matches(matcher, s.seq, cfg.drag_min_distance, cfg.max_pairs);
    return s;
  }
  throw TrainingError("stage 2: could not draw a sequence with matched points in 50 attempts");
}

std::vector<Matrix> snapshot(const ag::ParameterStore& store) {
  std::vector<Matrix> out;
  for (const ag::Parameter* p : store.all()) out.push_back(p->value);
  return out;
}

void restore(ag::ParameterStore& store, const std::vector<Matrix>& values) {
  auto params = store.all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

Stage2Result train_stage2(const ToyGenerator& gen, PredictorModel& predictor, RegularizerModel& regularizer,
                          const Stage2Config& config, const Stage2Callback& on_epoch) {
  config.validate();
  const PredictorConfig& pc = predictor.config();
  const GeneratorConfig& gc = gen.config();
  if (pc.layers != gc.layers || pc.edit_layers != gc.edit_layers || pc.latent_dim != gc.latent_dim ||
      pc.feature_resolution != gc.feature_resolution || pc.feature_channels != gc.feature_channels ||
      pc.image_resolution != gc.image_resolution) {
    throw ShapeError("predictor and generator shapes differ");
  }
  if (config.n > pc.max_positions) throw ParameterError("stage 2: n exceeds the predictor's max_positions");
  const RegularizerModel* reg = config.use_regularizer ? &regularizer : nullptr;
  const OracleMatcher matcher(gen);

  auto pred_params = predictor.params().all();
  auto reg_params = regularizer.params().all();
  ag::Adam pred_opt(pred_params);
  ag::Adam reg_opt(reg_params);
  std::vector<Matrix> good_pred = snapshot(predictor.params());
  std::vector<Matrix> good_reg = snapshot(regularizer.params());

  const int l = gc.layers;
  const int n = config.n;
  const int steps = config.samples_per_epoch / config.batch_size;
  Stage2Result result;
  std::uint64_t step_id = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = ag::cosine_annealing(config.lr_init, config.lr_min, config.cosine_period, epoch);
    Stage2Epoch rec;
    rec.epoch = epoch;
    rec.lr = lr;
    for (int s = 0; s < steps; ++s, ++step_id) {
      Rng rng(derive_seed(config.seed, step_id));
      std::vector<TrainSample> batch;
      for (int b = 0; b < config.batch_size; ++b) batch.push_back(draw_sample(gen, matcher, config, rng));

      ag::Tape t;
      std::vector<ContextInput> ctx;
      std::vector<LatentCode> prefix;
      for (const TrainSample& smp : batch) {
        ctx.push_back(ContextInput{&smp.f0, smp.pairs});
        prefix.insert(prefix.end(), smp.seq.codes.begin(), smp.seq.codes.end() - 1);
      }
      const Memory mem = predictor.encode(t, ctx);
      ag::Var predicted = predictor.predict(t, mem, t.constant(stack_latents(prefix)), config.batch_size, n, reg);

      ag::Var l_pred = t.constant(Matrix::Zero(1, 1));
      ag::Var l_drag = t.constant(Matrix::Zero(1, 1));
      for (int b = 0; b < config.batch_size; ++b) {
        const TrainSample& smp = batch[static_cast<std::size_t>(b)];
        ag::Var mine = ag::slice_rows(predicted, static_cast<Eigen::Index>(b) * n * l, static_cast<Eigen::Index>(n) * l);
        l_pred = ag::add(l_pred, pred_loss(t, mine, smp.seq));
        if (config.beta > 0.0) l_drag = ag::add(l_drag, drag_loss(t, gen, mine, smp.seq, smp.steps));
      }
      const double inv = 1.0 / config.batch_size;
      l_pred = ag::scale(l_pred, inv);
      l_drag = ag::scale(l_drag, inv);
      ag::Var loss = total_loss(l_pred, l_drag, config.alpha, config.beta);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        restore(predictor.params(), good_pred);
        restore(regularizer.params(), good_reg);
        std::ostringstream msg;
        msg << "stage 2: non-finite loss at epoch " << epoch << " step " << s
            << "; parameters restored to the end of epoch " << epoch - 1;
        throw TrainingError(msg.str());
      }
      pred_opt.zero_grad();
      reg_opt.zero_grad();
      t.backward(loss);
      ag::clip_grad_norm(pred_params, config.grad_clip);
      pred_opt.step(lr);
      if (reg != nullptr && config.regularizer_lr > 0.0) {
        ag::clip_grad_norm(reg_params, config.grad_clip);
        reg_opt.step(config.regularizer_lr);
      }
      rec.l_pred += l_pred.value()(0, 0) / steps;
      rec.l_drag += l_drag.value()(0, 0) / steps;
      rec.total += value / steps;
    }
    good_pred = snapshot(predictor.params());
    good_reg = snapshot(regularizer.params());
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace autodrag
