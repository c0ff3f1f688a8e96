// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every operation of one forward pass; backward()
// walks the records in reverse and accumulates gradients into the Parameters
// that were read.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace autodrag::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  Parameter(std::string name, Matrix value)
      : name(std::move(name)), value(std::move(value)), grad(Matrix::Zero(this->value.rows(), this->value.cols())) {}

  std::string name;
  Matrix value;
  Matrix grad;
};

// Owns parameters with stable addresses, in registration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();
  // Copies values by name; both stores must have identical layouts.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the gradient flowing into the node plus the node's own value and
  // scatters it to inputs via Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& grad, const Matrix& out)>;

  // With record_gradients=false no backward closures are stored and
  // backward() is unavailable.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);
  // Records a computed node. `inputs` decide whether the node needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  bool requires_grad(const Var& v) const;
  void accumulate(const Var& v, const Matrix& grad);
  // Gradient accumulated into a node during the last backward pass (empty if none).
  const Matrix& grad(const Var& v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1.
  void backward(const Var& loss);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  bool record_;
  std::deque<Node> nodes_;
};

// Number of backward passes executed on the calling thread.
std::uint64_t gradient_evaluations();

}  // namespace autodrag::ag
