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

#include "ftmssm/gradcheck_suite.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "ftmssm/denoiser.hpp"
#include "ftmssm/freq_mamba.hpp"
#include "ftmssm/layers.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/rng.hpp"
#include "ftmssm/text_mamba.hpp"

namespace ftm {
namespace {

constexpr std::size_t kLen = 8;

// Moves every parameter off its structured initial value (zero head,
// identity band kernels, zero alpha/beta) so all paths carry gradient.
void jitter(ParameterSet& ps, Rng& rng, double sigma) {
  for (auto& e : ps.entries()) {
    for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] += sigma * rng.normal();
  }
}

// Loss = <out, r> with r ~ N(0, 1/numel) drawn once, keeping the loss O(1).
Tensor readout(const Shape& shape, Rng& rng) {
  return rng.normal_tensor(shape, 1.0 / std::sqrt(static_cast<double>(shape_numel(shape))));
}

GradcheckFixture cdw_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"cdwconv", {}, {}};
  init_cdwconv(f.params, "cdw", 4, rng);
  jitter(f.params, rng, 0.1);
  f.params.add("input.x", rng.normal_tensor({2, kLen, 4}));
  const Tensor r = readout({2, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) { return weighted_sum(cdwconv(pv, "cdw", pv["input.x"]), r); };
  return f;
}

GradcheckFixture freq_ssm_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"freq_ssm", {}, {}};
  init_freq_ssm(f.params, "fs", 4, 4, rng);
  jitter(f.params, rng, 0.05);
  f.params.get("fs.alpha")[0] = 0.3;
  f.params.get("fs.beta")[0] = -0.2;
  f.params.add("input.x", rng.normal_tensor({2, kLen, 4}));
  const Tensor r = readout({2, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) { return weighted_sum(freq_ssm(pv, "fs", pv["input.x"]), r); };
  return f;
}

GradcheckFixture text_ssm_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"text_ssm", {}, {}};
  init_text_ssm(f.params, "ts", 4, 4, 6, rng);
  jitter(f.params, rng, 0.05);
  f.params.add("input.x", rng.normal_tensor({2, kLen, 4}));
  f.params.add("input.text", rng.normal_tensor({2, 6}, 0.5));
  const Tensor r = readout({2, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) {
    return weighted_sum(text_ssm(pv, "ts", pv["input.x"], pv["input.text"]), r);
  };
  return f;
}

GradcheckFixture freq_block_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"freq_mamba_block", {}, {}};
  init_freq_mamba_block(f.params, "fm", 4, 4, rng, true);
  jitter(f.params, rng, 0.05);
  f.params.add("input.x", rng.normal_tensor({1, kLen, 4}));
  const Tensor r = readout({1, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) { return weighted_sum(freq_mamba_block(pv, "fm", pv["input.x"], true), r); };
  return f;
}

GradcheckFixture text_block_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"text_mamba_block", {}, {}};
  init_text_mamba_block(f.params, "tm", 4, 4, 6, rng);
  jitter(f.params, rng, 0.05);
  f.params.add("input.x", rng.normal_tensor({1, kLen, 4}));
  f.params.add("input.text", rng.normal_tensor({1, 6}, 0.5));
  const Tensor r = readout({1, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) {
    return weighted_sum(text_mamba_block(pv, "tm", pv["input.x"], pv["input.text"]), r);
  };
  return f;
}

GradcheckFixture layer_fixture(std::uint64_t seed) {
  Rng rng(seed);
  const DenoiserConfig cfg = DenoiserConfig::tiny();
  GradcheckFixture f{"ftmamba_layer", {}, {}};
  init_ftmamba_layer(f.params, "layer", cfg, rng);
  jitter(f.params, rng, 0.05);
  f.params.add("input.z", rng.normal_tensor({1, cfg.latent_length, cfg.channels}));
  f.params.add("input.t_feat", rng.normal_tensor({1, cfg.channels}, 0.5));
  f.params.add("input.text", rng.normal_tensor({1, cfg.text_dim}, 0.5));
  const Tensor r = readout({1, cfg.latent_length, cfg.channels}, rng);
  const bool bidir = cfg.bidirectional;
  f.loss = [r, bidir](const ParamVars& pv) {
    return weighted_sum(ftmamba_layer(pv, "layer", pv["input.z"], pv["input.t_feat"], pv["input.text"], bidir), r);
  };
  return f;
}

GradcheckFixture denoiser_fixture(std::uint64_t seed) {
  Rng rng(seed);
  const DenoiserConfig cfg = DenoiserConfig::tiny();
  auto model = std::make_shared<Denoiser>(Denoiser::create(cfg, derive_seed(seed, "model")));
  GradcheckFixture f{"denoiser_tiny", model->params(), {}};
  jitter(f.params, rng, 0.05);
  // The head output is multiplied by head_scale; shrink its jitter to match so
  // the loss stays O(latent size) and central differences keep their digits.
  for (const char* k : {"head.w", "head.b"}) {
    Tensor& w = f.params.get(k);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] /= cfg.head_scale;
  }
  const Tensor z = rng.normal_tensor({2, cfg.latent_length, cfg.latent_dim});
  const Tensor text = rng.normal_tensor({2, cfg.text_dim}, 0.5);
  const Tensor eps = rng.normal_tensor({2, cfg.latent_length, cfg.latent_dim});
  const std::vector<std::size_t> t = {17, 640};
  // Same shape of objective as training: ||eps_hat - eps||^2 / B.
  f.loss = [model, z, text, eps, t](const ParamVars& pv) {
    const Var pred = model->forward(pv, constant(z), t, constant(text));
    return scale(sum_squares(sub(pred, constant(eps))), 0.5);
  };
  return f;
}

GradcheckFixture corrupted_fixture(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckFixture f{"corrupted_adjoint", {}, {}, true};
  init_cdwconv(f.params, "cdw", 4, rng);
  f.params.add("input.x", rng.normal_tensor({1, kLen, 4}));
  const Tensor r = readout({1, kLen, 4}, rng);
  f.loss = [r](const ParamVars& pv) {
    return weighted_sum(square_with_wrong_adjoint(cdwconv(pv, "cdw", pv["input.x"])), r);
  };
  return f;
}

}  // namespace

std::vector<GradcheckFixture> gradcheck_fixtures(std::uint64_t seed, bool negative_control) {
  std::vector<GradcheckFixture> out;
  out.push_back(cdw_fixture(derive_seed(seed, "cdwconv")));
  out.push_back(freq_ssm_fixture(derive_seed(seed, "freq_ssm")));
  out.push_back(text_ssm_fixture(derive_seed(seed, "text_ssm")));
  out.push_back(freq_block_fixture(derive_seed(seed, "freq_mamba_block")));
  out.push_back(text_block_fixture(derive_seed(seed, "text_mamba_block")));
  out.push_back(layer_fixture(derive_seed(seed, "ftmamba_layer")));
  out.push_back(denoiser_fixture(derive_seed(seed, "denoiser_tiny")));
  if (negative_control) out.push_back(corrupted_fixture(derive_seed(seed, "corrupted")));
  return out;
}

std::vector<BlockCheck> run_gradcheck_suite(std::uint64_t seed, const GradcheckOptions& opts) {
  std::vector<BlockCheck> out;
  for (auto& fx : gradcheck_fixtures(seed, opts.negative_control)) {
    const auto t0 = std::chrono::steady_clock::now();
    BlockCheck bc;
    bc.block = fx.block;
    bc.expected_to_fail = fx.expected_to_fail;
    bc.scalars = fx.params.scalar_count();
    bc.report = grad_check(fx.loss, fx.params, opts.rel_tol, opts.abs_tol, opts.epsilon);
    bc.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(bc));
  }
  return out;
}

bool suite_passed(const std::vector<BlockCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.expected_to_fail && !c.report.passed) return false;
  }
  return true;
}

}  // namespace ftm
