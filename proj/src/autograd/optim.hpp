// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "autograd/tape.hpp"

#include <vector>

namespace autodrag::ag {

// Adaptive moment estimation with bias correction.
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(double learning_rate);
  void zero_grad();
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Rescales gradients so their joint L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

// Cosine annealing without restarts: lr(e) = lr_min + (lr_max - lr_min)(1 + cos(pi e / period)) / 2.
// The rate reaches lr_min at e = period and climbs back to lr_max at 2 * period.
double cosine_annealing(double lr_max, double lr_min, int period, int epoch);

}  // namespace autodrag::ag
