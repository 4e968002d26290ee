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

// Selective state-space core.
//
// Continuous system per channel d and state n:
//   h'(t) = A[d,n] h(t) + B[n] x_d(t),   y_d = sum_n C[n] h + D_skip[d] x_d
// Zero-order-hold discretization with step delta[t,d]:
//   A_bar = exp(delta*A),   B_bar = (exp(delta*A) - 1) / A * B = delta * phi(delta*A) * B
// with phi(z) = (e^z - 1)/z, evaluated by series near z = 0.

#include <cmath>
#include <optional>

#include "ftmssm/autograd.hpp"
#include "ftmssm/tensor.hpp"

namespace ftm {

namespace zoh {

// Below this |delta*A| the B_bar factor uses the series limit 1 + z/2.
inline constexpr double kSeriesThreshold = 1e-8;

inline double phi(double z) {
  if (std::abs(z) < kSeriesThreshold) return 1.0 + 0.5 * z;
  return std::expm1(z) / z;
}

inline double phi_derivative(double z) {
  if (std::abs(z) < 1e-3) return 0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z / 30.0));
  return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

// Same value as phi_derivative(z), reusing a_bar = e^z and phi(z) already at hand.
inline double phi_derivative(double z, double a_bar, double ph) {
  if (std::abs(z) < 1e-3) return phi_derivative(z);
  return (a_bar - ph) / z;
}

}  // namespace zoh

struct SelectiveSSMParams {
  Tensor a;       // (D, N), strictly negative
  Tensor b_seq;   // (L, N)
  Tensor c_seq;   // (L, N)
  Tensor d_skip;  // (D)
  Tensor delta;   // (L, D), strictly positive

  std::size_t length() const { return delta.dim(0); }
  std::size_t channels() const { return a.dim(0); }
  std::size_t states() const { return a.dim(1); }
};

struct DiscreteSSMParams {
  Tensor a_bar;  // (L, D, N), entries in (0, 1]
  Tensor b_bar;  // (L, D, N)
};

struct HiddenState {
  Tensor h;  // (D, N)
};

struct ScanResult {
  Tensor y;  // (L, D)
  HiddenState h_final;
};

// Checks shapes and signs; throws ContractViolation naming the first bad index.
void validate(const SelectiveSSMParams& p);

DiscreteSSMParams discretize_zoh(const SelectiveSSMParams& params);

// h_t = A_bar_t h_{t-1} + B_bar_t x_t;  y_t = C_t h_t + D_skip x_t.
// h0 defaults to zero.
ScanResult scan_recurrent(const DiscreteSSMParams& disc, const Tensor& c_seq, const Tensor& d_skip, const Tensor& x,
                          const std::optional<HiddenState>& h0 = std::nullopt);

// Discretize and scan.
ScanResult scan(const SelectiveSSMParams& params, const Tensor& x);

// Convolutional form for time-invariant parameters (B, C, delta constant
// over time): y = x * K_bar + D_skip x with K_bar[k] = C A_bar^k B_bar.
Tensor kernel_convolution(const SelectiveSSMParams& lti, const Tensor& x);

// y = scan(fwd, x) + reverse(scan(bwd, reverse(x))). The sequences in `bwd`
// are indexed in reversed time, i.e. aligned with reverse(x).
Tensor scan_bidirectional(const SelectiveSSMParams& fwd, const SelectiveSSMParams& bwd, const Tensor& x);

Tensor reverse_time(const Tensor& x);  // (L, ...) along axis 0

// Differentiable fused selective scan over a batch.
struct ScanInputs {
  Var x;                    // (B, L, D)
  Var delta;                // (B, L, D), positive
  Var a;                    // (D, N), negative
  std::optional<Var> a_mod; // (B, L, D): A_n[b,t,d,:] = A[d,:] + a_mod[b,t,d]
  Var b;                    // (B, L, N)
  Var c;                    // (B, L, N)
  std::optional<Var> d_skip;  // (D)
};

// When a_mod is present the discretization argument delta*A_n is clamped
// to at most kModulatedClamp so A_bar stays in (0, 1).
inline constexpr double kModulatedClamp = -1e-6;

Var selective_scan(const ScanInputs& in);

}  // namespace ftm
