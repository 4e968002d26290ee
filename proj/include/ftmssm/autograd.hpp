// Copyright 2026 The ftmssm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Tensor-level reverse-mode differentiation.
//
// A Var is a handle to a node in a dynamically built graph. Each primitive
// in ops.hpp computes its value eagerly and records a closure that
// accumulates cotangents into its parents. backward() walks the graph in
// reverse topological order. Gradients are only tracked through nodes that
// (transitively) depend on a leaf created with requires_grad.

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ftmssm/tensor.hpp"

namespace ftm {

struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "leaf";
  bool requires_grad = false;

  // Zero-initialized cotangent buffer, allocated on first use.
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t i) const { return node_->value.dim(i); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

  // Accumulated gradient; zeros of the value's shape if none flowed here.
  Tensor grad() const;

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad = true);

// Builds an op node. `backward` is invoked only when the output requires
// grad; it must skip parents whose requires_grad is false. In checked mode a
// non-finite output raises NumericError naming `op`.
Var make_op(const char* op, Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
void backward(const Var& loss);

// Named parameters in insertion order.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool frozen = false;
  };

  void add(std::string name, Tensor value, bool frozen = false);
  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  void set_frozen(std::string_view name, bool frozen);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  bool operator==(const ParameterSet& o) const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Leaf Vars for every parameter of a set, looked up by name.
class ParamVars {
 public:
  ParamVars(const ParameterSet& params, bool track_gradients);
  const Var& operator[](std::string_view name) const;
  const Var& at(std::size_t i) const { return vars_[i]; }
  bool contains(std::string_view name) const { return params_->contains(name); }

 private:
  const ParameterSet* params_;
  std::vector<Var> vars_;
};

using LossFn = std::function<Var(const ParamVars&)>;

// Reverse-mode gradient of a scalar loss with respect to every parameter.
// Frozen parameters get zero gradients.
ParameterSet gradient(const LossFn& loss_fn, const ParameterSet& params);

// Value of the loss without recording gradients.
double evaluate_loss(const LossFn& loss_fn, const ParameterSet& params);

// Central differences (f(x+eps) - f(x-eps)) / 2eps for every scalar entry.
ParameterSet finite_difference_gradient(const LossFn& loss_fn, const ParameterSet& params, double epsilon);

struct ParamCheck {
  std::string name;
  double max_error = 0.0;      // worst entry error under the tolerance rule
  bool relative = false;       // whether max_error is a relative error
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool passed = true;
};

struct CheckReport {
  std::vector<ParamCheck> params;
  bool passed = true;
  std::string worst_param;
  double worst_relative_error = 0.0;
  double worst_absolute_error = 0.0;
};

// Compares gradient() against finite_difference_gradient(). An entry passes
// when |analytic - numeric| <= abs_tol + rel_tol * max(|analytic|, |numeric|).
// Reported errors are relative for entries above abs_tol, absolute below.
CheckReport grad_check(const LossFn& loss_fn, const ParameterSet& params, double rel_tol, double abs_tol,
                       double epsilon = 1e-5);

}  // namespace ftm
