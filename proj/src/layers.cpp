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

#include "ftmssm/layers.hpp"

#include <cmath>

#include "ftmssm/ops.hpp"

namespace ftm {

void init_linear(ParameterSet& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
                 bool with_bias, double gain) {
  ps.add(join(prefix, "w"), rng.normal_tensor({in, out}, gain / std::sqrt(static_cast<double>(in))));
  if (with_bias) ps.add(join(prefix, "b"), Tensor({out}));
}

Var apply_linear(const ParamVars& pv, const std::string& prefix, const Var& x, bool with_bias) {
  if (with_bias) return linear(x, pv[join(prefix, "w")], pv[join(prefix, "b")]);
  return linear(x, pv[join(prefix, "w")]);
}

void init_cdwconv(ParameterSet& ps, const std::string& prefix, std::size_t channels, Rng& rng) {
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string stage = prefix + ".cdw" + std::to_string(i);
    // Near-identity: current-frame tap 1 plus small noise on every tap.
    Tensor w = rng.normal_tensor({channels, kCdwTaps}, 0.1);
    for (std::size_t c = 0; c < channels; ++c) w[c * kCdwTaps] += 1.0;
    ps.add(stage + ".w", std::move(w));
    ps.add(stage + ".b", Tensor({channels}));
  }
}

Var cdwconv(const ParamVars& pv, const std::string& prefix, const Var& x) {
  Var y = x;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string stage = prefix + ".cdw" + std::to_string(i);
    y = depthwise_causal_conv(y, pv[stage + ".w"], pv[stage + ".b"], kCdwDilations[i]);
  }
  return y;
}

void init_selective(ParameterSet& ps, const std::string& prefix, std::size_t channels, std::size_t states, Rng& rng,
                    bool with_skip) {
  // A[d, n] = -(n + 1) at initialization.
  Tensor a_log({channels, states});
  for (std::size_t d = 0; d < channels; ++d) {
    for (std::size_t n = 0; n < states; ++n) a_log[d * states + n] = std::log(static_cast<double>(n + 1));
  }
  ps.add(join(prefix, "a_log"), std::move(a_log));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(channels));
  ps.add(join(prefix, "w_b"), rng.normal_tensor({channels, states}, inv_sqrt));
  ps.add(join(prefix, "w_c"), rng.normal_tensor({channels, states}, inv_sqrt));
  ps.add(join(prefix, "w_dt"), rng.normal_tensor({channels, channels}, 0.1 * inv_sqrt));
  // Step sizes log-uniform in [1e-2, 1e-1], stored through inverse softplus.
  Tensor b_dt({channels});
  for (std::size_t d = 0; d < channels; ++d) {
    const double dt = std::exp(rng.uniform(std::log(1e-2), std::log(1e-1)));
    b_dt[d] = dt + std::log(-std::expm1(-dt));
  }
  ps.add(join(prefix, "b_dt"), std::move(b_dt));
  if (with_skip) ps.add(join(prefix, "d_skip"), Tensor({channels}, 1.0));
}

SelectiveVars selective_projections(const ParamVars& pv, const std::string& prefix, const Var& u, bool with_skip) {
  SelectiveVars s;
  s.a = neg(exp(pv[join(prefix, "a_log")]));
  s.b = linear(u, pv[join(prefix, "w_b")]);
  s.c = linear(u, pv[join(prefix, "w_c")]);
  s.delta = softplus(linear(u, pv[join(prefix, "w_dt")], pv[join(prefix, "b_dt")]));
  if (with_skip) s.d_skip = pv[join(prefix, "d_skip")];
  return s;
}

}  // namespace ftm
