// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "nn/layers.hpp"

#include <cmath>

namespace autodrag::nn {

ParamBuilder ParamBuilder::scoped(const std::string& name) const {
  return ParamBuilder(store_, rng_, prefix_.empty() ? name : prefix_ + "." + name);
}

Parameter& ParamBuilder::uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                 double fan_in, double gain) {
  const double bound = gain / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
  return store_.add(prefix_.empty() ? name : prefix_ + "." + name, std::move(m));
}

Parameter& ParamBuilder::normal(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
  return store_.add(prefix_.empty() ? name : prefix_ + "." + name, std::move(m));
}

Parameter& ParamBuilder::constant(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                  double value) {
  return store_.add(prefix_.empty() ? name : prefix_ + "." + name, Matrix::Constant(rows, cols, value));
}

Linear::Linear(ParamBuilder b, Eigen::Index in, Eigen::Index out, double gain)
    : weight(&b.uniform("weight", in, out, static_cast<double>(in), gain)),
      bias(&b.constant("bias", 1, out, 0.0)) {}

Var Linear::operator()(Tape& t, const Var& x) const {
  return ag::linear(x, t.param(*weight), t.param(*bias));
}

LayerNorm::LayerNorm(ParamBuilder b, Eigen::Index width)
    : gain(&b.constant("gain", 1, width, 1.0)), bias(&b.constant("bias", 1, width, 0.0)) {}

Var LayerNorm::operator()(Tape& t, const Var& x) const {
  return ag::layer_norm(x, t.param(*gain), t.param(*bias));
}

Mlp::Mlp(ParamBuilder b, Eigen::Index in, Eigen::Index hidden, Eigen::Index out, double out_gain)
    : first(b.scoped("fc1"), in, hidden), second(b.scoped("fc2"), hidden, out, out_gain) {}

Var Mlp::operator()(Tape& t, const Var& x) const { return second(t, ag::gelu(first(t, x))); }

MultiHeadAttention::MultiHeadAttention(ParamBuilder b, Eigen::Index width, int heads, double out_gain)
    : q(b.scoped("q"), width, width),
      k(b.scoped("k"), width, width),
      v(b.scoped("v"), width, width),
      o(b.scoped("o"), width, width, out_gain),
      heads(heads) {}

Var MultiHeadAttention::operator()(Tape& t, const Var& queries, const Var& memory,
                                   const ag::Segments& segments, bool causal) const {
  Var qv = q(t, queries);
  Var kv = k(t, memory);
  Var vv = v(t, memory);
  return o(t, ag::attention(qv, kv, vv, segments, heads, causal));
}

namespace {
// Residual branches are damped with depth so deep stacks start close to identity.
double residual_gain(int depth) { return 1.0 / std::sqrt(2.0 * static_cast<double>(depth)); }
}  // namespace

EncoderLayer::EncoderLayer(ParamBuilder b, const TransformerDims& dims, int depth)
    : norm_attn(b.scoped("norm_attn"), dims.width),
      norm_ffn(b.scoped("norm_ffn"), dims.width),
      attn(b.scoped("attn"), dims.width, dims.heads, residual_gain(depth)),
      ffn(b.scoped("ffn"), dims.width, dims.ffn_width, dims.width, residual_gain(depth)) {}

Var EncoderLayer::operator()(Tape& t, const Var& x, const std::vector<int>& offsets) const {
  const ag::Segments segs{offsets, offsets};
  Var h = norm_attn(t, x);
  Var y = ag::add(x, attn(t, h, h, segs, false));
  return ag::add(y, ffn(t, norm_ffn(t, y)));
}

DecoderLayer::DecoderLayer(ParamBuilder b, const TransformerDims& dims, int depth)
    : norm_self(b.scoped("norm_self"), dims.width),
      norm_cross(b.scoped("norm_cross"), dims.width),
      norm_ffn(b.scoped("norm_ffn"), dims.width),
      self_attn(b.scoped("self_attn"), dims.width, dims.heads, residual_gain(depth)),
      cross_attn(b.scoped("cross_attn"), dims.width, dims.heads, residual_gain(depth)),
      ffn(b.scoped("ffn"), dims.width, dims.ffn_width, dims.width, residual_gain(depth)) {}

Var DecoderLayer::operator()(Tape& t, const Var& x, const Var& memory, const std::vector<int>& q_offsets,
                             const std::vector<int>& k_offsets, bool causal) const {
  Var h = norm_self(t, x);
  Var y = ag::add(x, self_attn(t, h, h, ag::Segments{q_offsets, q_offsets}, causal));
  y = ag::add(y, cross_attn(t, norm_cross(t, y), memory, ag::Segments{q_offsets, k_offsets}, false));
  return ag::add(y, ffn(t, norm_ffn(t, y)));
}

Encoder::Encoder(ParamBuilder b, const TransformerDims& dims, int n) : final_norm(b.scoped("final_norm"), dims.width) {
  layers.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) layers.emplace_back(b.scoped("layer" + std::to_string(i)), dims, n);
}

Var Encoder::operator()(Tape& t, Var x, const std::vector<int>& offsets) const {
  for (const auto& layer : layers) x = layer(t, x, offsets);
  return final_norm(t, x);
}

Decoder::Decoder(ParamBuilder b, const TransformerDims& dims, int n) : final_norm(b.scoped("final_norm"), dims.width) {
  layers.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) layers.emplace_back(b.scoped("layer" + std::to_string(i)), dims, n);
}

Var Decoder::operator()(Tape& t, Var x, const Var& memory, const std::vector<int>& q_offsets,
                        const std::vector<int>& k_offsets, bool causal) const {
  for (const auto& layer : layers) x = layer(t, x, memory, q_offsets, k_offsets, causal);
  return final_norm(t, x);
}

}  // namespace autodrag::nn
