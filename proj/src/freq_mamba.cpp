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

#include "ftmssm/freq_mamba.hpp"

#include "ftmssm/error.hpp"
#include "ftmssm/layers.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/ssm.hpp"

namespace ftm {

void init_freq_ssm(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states, Rng& rng) {
  init_selective(ps, prefix, channels, states, rng, /*with_skip=*/false);
  ps.add(join(prefix, "alpha"), Tensor({1}));
  ps.add(join(prefix, "beta"), Tensor({1}));
  for (const char* band : {"band_low", "band_high"}) {
    Tensor w({channels, kCdwTaps});
    for (std::size_t c = 0; c < channels; ++c) w[c * kCdwTaps] = 1.0;
    ps.add(join(prefix, band) + ".w", std::move(w));
    ps.add(join(prefix, band) + ".b", Tensor({channels}));
  }
  init_linear(ps, join(prefix, "band_to_mod"), channels, channels, rng, /*with_bias=*/false);
}

FreqSSMTrace freq_ssm_trace(const ParamVars& pv, const std::string& prefix, const Var& x) {
  FTM_REQUIRE(x.value().rank() == 3, "freq_ssm: expected (B, L, D), got " + shape_str(x.shape()));
  const std::size_t length = x.dim(1);
  FTM_REQUIRE(length >= 2, "freq_ssm: the wavelet split needs L >= 2, got L = " + std::to_string(length));

  FreqSSMTrace tr;
  const std::string lo = join(prefix, "band_low");
  const std::string hi = join(prefix, "band_high");
  tr.f_low = depthwise_causal_conv(haar_low(x), pv[lo + ".w"], pv[lo + ".b"], 1);
  tr.f_high = depthwise_causal_conv(haar_high(x), pv[hi + ".w"], pv[hi + ".b"], 1);
  const std::string to_mod = join(prefix, "band_to_mod");
  tr.m_low = upsample_repeat(apply_linear(pv, to_mod, tr.f_low, false), length);
  tr.m_high = upsample_repeat(apply_linear(pv, to_mod, tr.f_high, false), length);
  tr.modulation = add(scalar_mul(pv[join(prefix, "alpha")], tr.m_low), scalar_mul(pv[join(prefix, "beta")], tr.m_high));

  SelectiveVars s = selective_projections(pv, prefix, x, /*with_skip=*/false);
  tr.scan_out = selective_scan({x, s.delta, s.a, tr.modulation, s.b, s.c, std::nullopt});
  tr.out = add(tr.scan_out, haar_inverse(tr.f_low, tr.f_high, length));
  return tr;
}

Var freq_ssm(const ParamVars& pv, const std::string& prefix, const Var& x) {
  return freq_ssm_trace(pv, prefix, x).out;
}

void init_freq_mamba_block(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                           Rng& rng, bool bidirectional) {
  init_linear(ps, join(prefix, "in_linear"), channels, channels, rng);
  init_cdwconv(ps, prefix, channels, rng);
  init_freq_ssm(ps, join(prefix, "fwd"), channels, states, rng);
  if (bidirectional) init_freq_ssm(ps, join(prefix, "bwd"), channels, states, rng);
  init_linear(ps, join(prefix, "out_linear"), channels, channels, rng);
}

Var freq_mamba_block(const ParamVars& pv, const std::string& prefix, const Var& x, bool bidirectional) {
  const Var f_lin = apply_linear(pv, join(prefix, "in_linear"), x);
  const Var u = sigmoid(cdwconv(pv, prefix, f_lin));
  Var f_freq = freq_ssm(pv, join(prefix, "fwd"), u);
  if (bidirectional) f_freq = add(f_freq, time_reverse(freq_ssm(pv, join(prefix, "bwd"), time_reverse(u))));
  return apply_linear(pv, join(prefix, "out_linear"), mul(f_freq, sigmoid(f_lin)));
}

}  // namespace ftm
