// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "autograd/tape.hpp"

#include <span>
#include <vector>

namespace autodrag::ag {

Var matmul(const Var& a, const Var& b);
// x * w + 1 * b, with b a 1 x out row.
Var linear(const Var& x, const Var& w, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// a * s for a 1x1 variable s.
Var scale_by(const Var& a, const Var& s);
// x holds `batch` stacked blocks of m.cols() rows; block b of the result is m * x_b.
Var batched_left_matmul(const Var& m, const Var& x, int batch);
// Adds a 1 x cols row to every row of a.
Var add_row(const Var& a, const Var& row);

Var gelu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);

// Row-wise normalisation with learned gain and bias (both 1 x cols).
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
// Row-major reinterpretation; rows * cols must equal a.size().
Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols);

// out.row(i) = a.row(index[i]); index -1 yields a zero row.
Var gather_rows(const Var& a, std::vector<int> index);
// im2col: table is out_rows x taps of source rows (-1 pads with zeros); the
// result has taps * a.cols() columns, tap-major.
Var gather_taps(const Var& a, std::vector<int> table, int taps);

Var sum(const Var& a);
Var mean(const Var& a);
// mean |a - b| and sum |a - b|; the subgradient at zero is zero.
Var l1_mean(const Var& a, const Var& b);
Var l1_sum(const Var& a, const Var& b);

// Token ranges of a packed batch: segment s owns rows [offsets[s], offsets[s+1]).
struct Segments {
  std::vector<int> q_offsets;
  std::vector<int> k_offsets;
};

// Scaled dot-product attention with `heads` heads over packed segments. When
// causal is set, query row r of a segment sees keys 0..r of the same segment.
Var attention(const Var& q, const Var& k, const Var& v, const Segments& segments, int heads,
              bool causal);

}  // namespace autodrag::ag
