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

// Building blocks shared by the FreqMamba and TextMamba blocks. Parameters
// live in a flat ParameterSet under dotted prefixes, e.g. "enc.0.freq.cdw1.w".

#include <optional>
#include <string>

#include "ftmssm/autograd.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {

inline std::string join(const std::string& prefix, const char* leaf) {
  return prefix.empty() ? std::string(leaf) : prefix + "." + leaf;
}

// "<prefix>.w" (in, out) ~ N(0, gain^2 / in) and optional "<prefix>.b" zeros.
void init_linear(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
                 bool with_bias = true, double gain = 1.0);
Var apply_linear(const ParamVars& pv, const std::string& prefix, const Var& x, bool with_bias = true);

// Cascaded depthwise convolution: three causal stages, kernel 3, dilations
// 1, 2, 4 (receptive field 15 frames). Stage i owns "<prefix>.cdw<i>.w"
// (D, 3) and ".b" (D). Tap 0 multiplies the current frame.
inline constexpr std::size_t kCdwTaps = 3;
inline constexpr std::size_t kCdwDilations[3] = {1, 2, 4};
inline constexpr std::size_t kCdwReceptiveField = 15;

void init_cdwconv(ParameterSet& ps, const std::string& prefix, std::size_t channels, Rng& rng);
Var cdwconv(const ParamVars& pv, const std::string& prefix, const Var& x);

// Input-dependent SSM parameters for an input u (B, L, D):
//   A     = -exp(a_log)                      (D, N)
//   B_seq = u W_b,  C_seq = u W_c            (B, L, N)
//   delta = softplus(u W_dt + b_dt)          (B, L, D)
//   D_skip                                   (D), when requested
struct SelectiveVars {
  Var a;
  Var b;
  Var c;
  Var delta;
  std::optional<Var> d_skip;
};

void init_selective(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states, Rng& rng,
                    bool with_skip);
SelectiveVars selective_projections(const ParamVars& pv, const std::string& prefix, const Var& u, bool with_skip);

}  // namespace ftm
