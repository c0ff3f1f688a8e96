// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#include "autograd/tape.hpp"

#include "errors.hpp"

namespace autodrag::ag {

namespace {
thread_local std::uint64_t t_backward_passes = 0;
}  // namespace

std::uint64_t gradient_evaluations() { return t_backward_passes; }

Parameter& ParameterStore::add(const std::string& name, Matrix value) {
  for (const auto& p : params_) {
    if (p->name == name) throw ParameterError("duplicate parameter name: " + name);
  }
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ParameterError("unknown parameter: " + name);
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ParameterError("unknown parameter: " + name);
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) {
    throw ShapeError("parameter store layouts differ");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter& src = *other.params_[i];
    Parameter& dst = *params_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() ||
        src.value.cols() != dst.value.cols()) {
      throw ShapeError("parameter mismatch at " + dst.name);
    }
    dst.value = src.value;
  }
}

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw ShapeError("variable belongs to a different tape");
      if (nodes_[static_cast<std::size_t>(in.id_)].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

bool Tape::requires_grad(const Var& v) const {
  return nodes_[static_cast<std::size_t>(v.id_)].requires_grad;
}

void Tape::accumulate(const Var& v, const Matrix& grad) {
  Node& n = nodes_[static_cast<std::size_t>(v.id_)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = grad;
  } else {
    n.grad += grad;
  }
}

const Matrix& Tape::grad(const Var& v) const { return nodes_[static_cast<std::size_t>(v.id_)].grad; }

void Tape::backward(const Var& loss) {
  if (!record_) throw StateError("backward on a tape that does not record gradients");
  if (loss.tape_ != this) throw ShapeError("loss belongs to a different tape");
  if (loss.value().size() != 1) throw ShapeError("backward requires a scalar loss");
  ++t_backward_passes;
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Node& root = nodes_[static_cast<std::size_t>(loss.id_)];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t i = static_cast<std::size_t>(loss.id_) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad, n.value);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

}  // namespace autodrag::ag
