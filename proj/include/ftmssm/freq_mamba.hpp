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

// FreqSSM and the FreqMamba block.
//
// FreqSSM splits its input into Haar bands, enhances each band with a
// depthwise kernel-3 convolution, and turns the enhanced bands into a
// per-channel, per-frame modulation of the continuous state matrix:
//
//   A_n[t, d, :] = A[d, :] + alpha * m_low[t, d] + beta * m_high[t, d]
//
// where m_* = band_to_mod(f_*) upsampled from ceil(L/2) to L frames by
// repetition. A_n is discretized by ZOH (delta * A_n clamped at -1e-6),
// scanned, and the enhanced bands are added back through the inverse
// transform: y = C h + IDWT(f_low, f_high). There is no D skip term.

#include <string>

#include "ftmssm/autograd.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {

// Parameters under <prefix>:
//   a_log, w_b, w_c, w_dt, b_dt    selective base (see layers.hpp)
//   alpha, beta                    (1), zero at init
//   band_low.w/.b, band_high.w/.b  depthwise kernel-3 band enhancement
//   band_to_mod.w                  (D, D), bias-free
void init_freq_ssm(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states, Rng& rng);

struct FreqSSMTrace {
  Var f_low, f_high;    // enhanced bands (B, ceil(L/2), D)
  Var m_low, m_high;    // modulation sequences (B, L, D)
  Var modulation;       // alpha*m_low + beta*m_high
  Var scan_out;         // C h
  Var out;              // scan_out + IDWT(f_low, f_high)
};

FreqSSMTrace freq_ssm_trace(const ParamVars& pv, const std::string& prefix, const Var& x);
Var freq_ssm(const ParamVars& pv, const std::string& prefix, const Var& x);

// Parameters under <prefix>: in_linear, cdw0..2, fwd (FreqSSM), bwd (FreqSSM,
// only when bidirectional), out_linear.
void init_freq_mamba_block(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                           Rng& rng, bool bidirectional);

// f_lin = in_linear(x);  f_freq = FS(sigmoid(CDWConv(f_lin)))  [+ reversed-time
// pass when bidirectional];  out = out_linear(f_freq * sigmoid(f_lin)).
Var freq_mamba_block(const ParamVars& pv, const std::string& prefix, const Var& x, bool bidirectional);

}  // namespace ftm
