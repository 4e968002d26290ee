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

#include "ftmssm/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ftmssm/error.hpp"

namespace ftm {

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size() || grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Tensor Var::grad() const {
  if (node_->grad.shape() == node_->value.shape() && node_->grad.size() == node_->value.size()) return node_->grad;
  return Tensor(node_->value.shape());
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return Var(std::move(n));
}

Var leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

Var make_op(const char* op, Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  if (checked_mode() && !value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by op '") + op + "'");
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  for (auto& p : parents) {
    n->requires_grad = n->requires_grad || p.requires_grad();
    n->parents.push_back(p.node_ptr());
  }
  if (n->requires_grad) n->backward = std::move(backward);
  return Var(std::move(n));
}

void backward(const Var& loss) {
  FTM_REQUIRE(loss.size() == 1, "backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  if (!std::isfinite(loss.value()[0])) throw NumericError("backward: non-finite loss");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; only nodes that require grad are visited.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
  seen.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node().grad_buffer()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() == n->value.size()) n->backward(*n);
  }
}

// --- ParameterSet ---------------------------------------------------------

void ParameterSet::add(std::string name, Tensor value, bool frozen) {
  FTM_REQUIRE(!name.empty(), "ParameterSet::add: empty name");
  FTM_REQUIRE(!index_.contains(name), "ParameterSet::add: duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value), frozen});
}

bool ParameterSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractViolation("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Tensor& ParameterSet::get(std::string_view name) { return entries_[index_of(name)].value; }
const Tensor& ParameterSet::get(std::string_view name) const { return entries_[index_of(name)].value; }
void ParameterSet::set_frozen(std::string_view name, bool frozen) { entries_[index_of(name)].frozen = frozen; }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

bool ParameterSet::operator==(const ParameterSet& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = o.entries_[i];
    if (a.name != b.name || a.frozen != b.frozen || !(a.value == b.value)) return false;
  }
  return true;
}

ParamVars::ParamVars(const ParameterSet& params, bool track_gradients) : params_(&params) {
  vars_.reserve(params.size());
  for (const auto& e : params.entries()) vars_.push_back(leaf(e.value, track_gradients && !e.frozen));
}

const Var& ParamVars::operator[](std::string_view name) const {
  const auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return vars_[i];
  }
  throw ContractViolation("unknown parameter '" + std::string(name) + "'");
}

// --- gradient facility ----------------------------------------------------

ParameterSet gradient(const LossFn& loss_fn, const ParameterSet& params) {
  ParamVars vars(params, true);
  Var loss = loss_fn(vars);
  FTM_REQUIRE(loss.size() == 1, "gradient: loss must be a scalar, got shape " + shape_str(loss.shape()));
  backward(loss);
  ParameterSet out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.entries()[i];
    out.add(e.name, e.frozen ? Tensor(e.value.shape()) : vars.at(i).grad(), e.frozen);
  }
  return out;
}

double evaluate_loss(const LossFn& loss_fn, const ParameterSet& params) {
  ParamVars vars(params, false);
  Var loss = loss_fn(vars);
  FTM_REQUIRE(loss.size() == 1, "evaluate_loss: loss must be a scalar, got shape " + shape_str(loss.shape()));
  return loss.value()[0];
}

ParameterSet finite_difference_gradient(const LossFn& loss_fn, const ParameterSet& params, double epsilon) {
  FTM_REQUIRE(epsilon > 0.0, "finite_difference_gradient: epsilon must be positive");
  ParameterSet work = params;
  ParameterSet out;
  for (auto& e : work.entries()) {
    Tensor g(e.value.shape());
    if (!e.frozen) {
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double orig = e.value[i];
        e.value[i] = orig + epsilon;
        const double fp = evaluate_loss(loss_fn, work);
        e.value[i] = orig - epsilon;
        const double fm = evaluate_loss(loss_fn, work);
        e.value[i] = orig;
        g[i] = (fp - fm) / (2.0 * epsilon);
      }
    }
    out.add(e.name, std::move(g), e.frozen);
  }
  return out;
}

CheckReport grad_check(const LossFn& loss_fn, const ParameterSet& params, double rel_tol, double abs_tol,
                       double epsilon) {
  FTM_REQUIRE(rel_tol > 0.0 && abs_tol > 0.0, "grad_check: tolerances must be positive");
  const ParameterSet analytic = gradient(loss_fn, params);
  const ParameterSet numeric = finite_difference_gradient(loss_fn, params, epsilon);
  CheckReport report;
  double worst_ratio = -1.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& name = params.entries()[p].name;
    const Tensor& ga = analytic.entries()[p].value;
    const Tensor& gn = numeric.entries()[p].value;
    ParamCheck pc;
    pc.name = name;
    double param_ratio = -1.0;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double mag = std::max(std::abs(ga[i]), std::abs(gn[i]));
      const double abs_err = std::abs(ga[i] - gn[i]);
      const bool rel = mag > abs_tol;
      const double err = rel ? abs_err / mag : abs_err;
      const double ratio = abs_err / (abs_tol + rel_tol * mag);
      if (rel) {
        report.worst_relative_error = std::max(report.worst_relative_error, err);
      } else {
        report.worst_absolute_error = std::max(report.worst_absolute_error, err);
      }
      if (ratio > param_ratio) {
        param_ratio = ratio;
        pc.max_error = err;
        pc.relative = rel;
        pc.worst_index = i;
        pc.analytic = ga[i];
        pc.numeric = gn[i];
      }
    }
    pc.passed = param_ratio <= 1.0;
    report.passed = report.passed && pc.passed;
    if (param_ratio > worst_ratio) {
      worst_ratio = param_ratio;
      report.worst_param = name;
    }
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace ftm
