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

// Differentiable primitives. Sequence tensors are laid out (batch, time,
// channels); "last axis" ops treat every leading axis as rows.

#include <optional>
#include <utility>

#include "ftmssm/autograd.hpp"

namespace ftm {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // Hadamard
Var scale(const Var& a, double s);
Var neg(const Var& a);
Var exp(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var silu(const Var& a);
Var square(const Var& a);

// s (one element) times every entry of x.
Var scalar_mul(const Var& s, const Var& x);

// x (..., K) * w (K, N) + bias (N).
Var linear(const Var& x, const Var& w, const std::optional<Var>& bias = std::nullopt);

// x (..., N) + b (N) broadcast over leading axes.
Var add_bias(const Var& x, const Var& b);

// x (B, L, K) + v (B, K) broadcast over time.
Var add_over_time(const Var& x, const Var& v);

// Depthwise causal convolution along time:
//   y[b,t,d] = bias[d] + sum_k w[d,k] * x[b, t - k*dilation, d]
// with x taken as zero before t = 0. w is (D, K), bias (D).
Var depthwise_causal_conv(const Var& x, const Var& w, const Var& bias, std::size_t dilation);

// Dense convolution along time, kernel 3, zero "same" padding:
//   y[b,t,:] = bias + sum_{k=0..2} x[b, t+k-1, :] * w[k]
// x (B, L, Cin), w (3, Cin, Cout), bias (Cout).
Var conv1d_same(const Var& x, const Var& w, const Var& bias);

// One-level orthonormal Haar analysis along time of x (B, L, D). Odd L is
// right-padded by replicating the last frame. Each output is (B, ceil(L/2), D).
Var haar_low(const Var& x);
Var haar_high(const Var& x);
// Haar synthesis, dropping frames beyond `length`.
Var haar_inverse(const Var& low, const Var& high, std::size_t length);

// y[b,t,:] = x[b, t/2, :] for t < length; x is (B, ceil(length/2), D).
Var upsample_repeat(const Var& x, std::size_t length);

Var time_reverse(const Var& x);

Var sum(const Var& a);
Var sum_squares(const Var& a);
// sum(a * weights) with a constant weight tensor.
Var weighted_sum(const Var& a, const Tensor& weights);

// Reference primitive for the negative-control gradient checks: computes
// a^2 but back-propagates 3a instead of 2a.
Var square_with_wrong_adjoint(const Var& a);

}  // namespace ftm
