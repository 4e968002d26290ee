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

#include "ftmssm/text_mamba.hpp"

#include "ftmssm/error.hpp"
#include "ftmssm/layers.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/ssm.hpp"

namespace ftm {

void init_text_ssm(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                   std::size_t text_dim, Rng& rng) {
  init_selective(ps, prefix, channels, states, rng, /*with_skip=*/true);
  init_linear(ps, join(prefix, "text_proj"), text_dim, states, rng);
}

Var text_ssm(const ParamVars& pv, const std::string& prefix, const Var& x, const Var& text) {
  FTM_REQUIRE(x.value().rank() == 3, "text_ssm: expected (B, L, D), got " + shape_str(x.shape()));
  const Var& w = pv[join(prefix, "text_proj") + ".w"];
  FTM_REQUIRE(text.value().rank() == 2 && text.dim(0) == x.dim(0) && text.dim(1) == w.dim(0),
              "text_ssm: text embedding " + shape_str(text.shape()) + " does not match batch " +
                  std::to_string(x.dim(0)) + " and width " + std::to_string(w.dim(0)));
  SelectiveVars s = selective_projections(pv, prefix, x, /*with_skip=*/true);
  const Var c_s = add_over_time(s.c, apply_linear(pv, join(prefix, "text_proj"), text));
  return selective_scan({x, s.delta, s.a, std::nullopt, s.b, c_s, s.d_skip});
}

void init_text_mamba_block(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states,
                           std::size_t text_dim, Rng& rng) {
  init_linear(ps, join(prefix, "in_linear"), channels, channels, rng);
  init_cdwconv(ps, prefix, channels, rng);
  init_text_ssm(ps, join(prefix, "ssm"), channels, states, text_dim, rng);
  init_linear(ps, join(prefix, "out_linear"), channels, channels, rng);
}

Var text_mamba_block(const ParamVars& pv, const std::string& prefix, const Var& x, const Var& text) {
  const Var f_lin = apply_linear(pv, join(prefix, "in_linear"), x);
  const Var u = sigmoid(cdwconv(pv, prefix, f_lin));
  const Var f_text = text_ssm(pv, join(prefix, "ssm"), u, text);
  return apply_linear(pv, join(prefix, "out_linear"), mul(f_text, sigmoid(f_lin)));
}

}  // namespace ftm
