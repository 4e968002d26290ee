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

#include "ftmssm/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "ftmssm/error.hpp"

namespace ftm {

namespace {
std::atomic<bool> g_checked{true};
}

void set_checked_mode(bool enabled) { g_checked = enabled; }
bool checked_mode() { return g_checked; }

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  if (g_checked && !std::isfinite(fill)) throw NumericError("Tensor: non-finite fill value");
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw ContractViolation("Tensor: data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_str(shape_));
  }
  if (g_checked && !all_finite()) throw NumericError("Tensor: non-finite value in data");
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  FTM_REQUIRE(idx.size() == shape_.size(), "Tensor::at: index rank mismatch");
  std::size_t off = 0;
  std::size_t i = 0;
  for (std::size_t v : idx) {
    FTM_REQUIRE(v < shape_[i], "Tensor::at: index out of range");
    off = off * shape_[i] + v;
    ++i;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }
double Tensor::at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }

double Tensor::item() const {
  FTM_REQUIRE(data_.size() == 1, "Tensor::item: tensor has " + std::to_string(data_.size()) + " elements");
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  FTM_REQUIRE(shape_numel(shape) == data_.size(), "Tensor::reshaped: element count mismatch");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  FTM_REQUIRE(a.shape() == b.shape(), "max_abs_diff: shape mismatch " + shape_str(a.shape()) + " vs " +
                                          shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace ftm
