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

// TextSSM and the TextMamba block. The sentence embedding shifts the output
// matrix of an otherwise ordinary selective SSM:
//   C_s[t] = C_seq[t] + text_proj(f_t)
//   y[t, d] = sum_n C_s[t, n] h[t, d, n] + D_skip[d] x[t, d]
// The state recurrence does not see the text.

#include <string>

#include "ftmssm/autograd.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {

// <prefix>: selective base with d_skip, text_proj.w (E, N), text_proj.b (N).
void init_text_ssm(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                   std::size_t text_dim, Rng& rng);

// x (B, L, D), text (B, E).
Var text_ssm(const ParamVars& pv, const std::string& prefix, const Var& x, const Var& text);

void init_text_mamba_block(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                           std::size_t text_dim, Rng& rng);

// f_lin = in_linear(x);  f_text = TS(sigmoid(CDWConv(f_lin)), text);
// out = out_linear(f_text * sigmoid(f_lin)). Unidirectional.
Var text_mamba_block(const ParamVars& pv, const std::string& prefix, const Var& x, const Var& text);

}  // namespace ftm
