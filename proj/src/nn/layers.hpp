// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "autograd/ops.hpp"
#include "autograd/tape.hpp"

#include <random>
#include <string>
#include <vector>

namespace autodrag::nn {

using ag::Matrix;
using ag::Parameter;
using ag::ParameterStore;
using ag::Tape;
using ag::Var;

// Registers parameters under a name prefix with deterministic initialisation.
class ParamBuilder {
 public:
  ParamBuilder(ParameterStore& store, std::mt19937_64& rng, std::string prefix = {})
      : store_(store), rng_(rng), prefix_(std::move(prefix)) {}

  ParamBuilder scoped(const std::string& name) const;
  // U(-bound, bound) with bound = gain / sqrt(fan_in).
  Parameter& uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double fan_in,
                     double gain = 1.0);
  Parameter& normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev);
  Parameter& constant(const std::string& name, Eigen::Index rows, Eigen::Index cols, double value);

 private:
  ParameterStore& store_;
  std::mt19937_64& rng_;
  std::string prefix_;
};

struct Linear {
  Linear() = default;
  Linear(ParamBuilder b, Eigen::Index in, Eigen::Index out, double gain = 1.0);
  Var operator()(Tape& t, const Var& x) const;

  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParamBuilder b, Eigen::Index width);
  Var operator()(Tape& t, const Var& x) const;

  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

// Linear -> GELU -> Linear.
struct Mlp {
  Mlp() = default;
  Mlp(ParamBuilder b, Eigen::Index in, Eigen::Index hidden, Eigen::Index out, double out_gain = 1.0);
  Var operator()(Tape& t, const Var& x) const;

  Linear first;
  Linear second;
};

struct MultiHeadAttention {
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamBuilder b, Eigen::Index width, int heads, double out_gain);
  Var operator()(Tape& t, const Var& queries, const Var& memory, const ag::Segments& segments,
                 bool causal) const;

  Linear q, k, v, o;
  int heads = 1;
};

struct TransformerDims {
  Eigen::Index width = 64;
  Eigen::Index ffn_width = 128;
  int heads = 4;
};

// Pre-norm self-attention block.
struct EncoderLayer {
  EncoderLayer() = default;
  EncoderLayer(ParamBuilder b, const TransformerDims& dims, int depth);
  Var operator()(Tape& t, const Var& x, const std::vector<int>& offsets) const;

  LayerNorm norm_attn, norm_ffn;
  MultiHeadAttention attn;
  Mlp ffn;
};

// Pre-norm block: self-attention (optionally causal), cross-attention into a
// memory, feed-forward.
struct DecoderLayer {
  DecoderLayer() = default;
  DecoderLayer(ParamBuilder b, const TransformerDims& dims, int depth);
  Var operator()(Tape& t, const Var& x, const Var& memory, const std::vector<int>& q_offsets,
                 const std::vector<int>& k_offsets, bool causal) const;

  LayerNorm norm_self, norm_cross, norm_ffn;
  MultiHeadAttention self_attn, cross_attn;
  Mlp ffn;
};

struct Encoder {
  Encoder() = default;
  Encoder(ParamBuilder b, const TransformerDims& dims, int layers);
  Var operator()(Tape& t, Var x, const std::vector<int>& offsets) const;

  std::vector<EncoderLayer> layers;
  LayerNorm final_norm;
};

struct Decoder {
  Decoder() = default;
  Decoder(ParamBuilder b, const TransformerDims& dims, int layers);
  Var operator()(Tape& t, Var x, const Var& memory, const std::vector<int>& q_offsets,
                 const std::vector<int>& k_offsets, bool causal) const;

  std::vector<DecoderLayer> layers;
  LayerNorm final_norm;
};

}  // namespace autodrag::nn
