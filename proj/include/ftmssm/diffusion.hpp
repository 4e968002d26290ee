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

// Latent DDPM: linear beta schedule, closed-form noising, epsilon-prediction
// MSE objective, and a deterministic strided (DDIM, eta = 0) sampler.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ftmssm/autograd.hpp"
#include "ftmssm/denoiser.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {

struct DiffusionSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  std::size_t num_steps() const { return betas.size(); }

  // betas evenly spaced from beta_start to beta_end inclusive.
  static DiffusionSchedule linear(std::size_t num_steps = 1000, double beta_start = 8.5e-4, double beta_end = 0.012);
};

// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Tensor q_sample(const Tensor& z0, std::size_t t, const Tensor& eps, const DiffusionSchedule& schedule);

// Noise predictor over a batch: z_t (B, L, C), t (B), text (B, E) -> (B, L, C).
using EpsModel = std::function<Tensor(const Tensor&, std::span<const std::size_t>, const Tensor&)>;

EpsModel as_eps_model(const Denoiser& model);

struct NoisedBatch {
  Tensor z_t;
  Tensor eps;
  std::vector<std::size_t> t;
};

// Draws t ~ U{0..T-1} and eps ~ N(0, I) per row of z0 (B, L, C).
NoisedBatch make_noised_batch(const Tensor& z0, const DiffusionSchedule& schedule, Rng& rng);

// mean over the batch of ||eps - eps_hat||^2.
double training_loss(const EpsModel& model, const Tensor& z0, const Tensor& text, const DiffusionSchedule& schedule,
                     Rng& rng);
Var training_loss(const Denoiser& model, const ParamVars& pv, const Tensor& z0, const Tensor& text,
                  const DiffusionSchedule& schedule, Rng& rng);

struct SamplerConfig {
  std::size_t inference_steps = 50;
  std::uint64_t seed = 0;
  // 1 means plain conditional prediction. Other values blend with the
  // zero-text prediction: eps_u + s (eps_c - eps_u).
  double guidance_scale = 1.0;
};

// inference_steps timesteps from T-1 down to 0, evenly spaced and rounded.
std::vector<std::size_t> strided_timesteps(std::size_t num_steps, std::size_t inference_steps);

// Starts from per-row seeded N(0, I) noise (row i uses derive_seed(seed, i +
// first_row)) and applies the eta = 0 DDIM update; returns z0_hat.
Tensor sample(const Tensor& text, const EpsModel& model, const DiffusionSchedule& schedule,
              const SamplerConfig& sampler, std::size_t length, std::size_t width, std::size_t first_row = 0);

// --- optimisation -----------------------------------------------------------

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t steps = 0;
};

class AdamW {
 public:
  AdamW(AdamWConfig cfg, const ParameterSet& params);
  AdamW(AdamWConfig cfg, AdamWState state) : cfg_(cfg), state_(std::move(state)) {}

  // Decoupled weight decay, bias-corrected moments. Frozen entries are skipped.
  void step(ParameterSet& params, const ParameterSet& grads);

  const AdamWState& state() const { return state_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  AdamWState state_;
};

struct TrainingData {
  Tensor sequences;  // (n, L, C)
  Tensor texts;      // (n, E)
  std::size_t size() const { return sequences.dim(0); }
};

struct TrainConfig {
  std::size_t total_steps = 2000;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

// Runs optimizer steps until the optimizer has taken total_steps; batch,
// timesteps and noise of step k depend only on (seed, k), so a resumed run
// continues the uninterrupted trajectory. Returns the per-step losses of
// the steps taken. Throws NumericError on a non-finite loss.
std::vector<double> train(const TrainingData& data, Denoiser& model, AdamW& optimizer,
                          const DiffusionSchedule& schedule, const TrainConfig& cfg,
                          const std::function<void(std::size_t, double)>& on_step = {});

}  // namespace ftm
