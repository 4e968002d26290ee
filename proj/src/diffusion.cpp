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

#include "ftmssm/diffusion.hpp"

#include <cmath>

#include "ftmssm/error.hpp"
#include "ftmssm/ops.hpp"

namespace ftm {

DiffusionSchedule DiffusionSchedule::linear(std::size_t num_steps, double beta_start, double beta_end) {
  FTM_REQUIRE(num_steps >= 2, "DiffusionSchedule: need at least two steps");
  FTM_REQUIRE(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0,
              "DiffusionSchedule: need 0 < beta_start < beta_end < 1");
  DiffusionSchedule s;
  s.betas.resize(num_steps);
  s.alphas.resize(num_steps);
  s.alpha_bars.resize(num_steps);
  double prod = 1.0;
  for (std::size_t t = 0; t < num_steps; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(num_steps - 1);
    s.betas[t] = beta_start + (beta_end - beta_start) * frac;
    s.alphas[t] = 1.0 - s.betas[t];
    prod *= s.alphas[t];
    s.alpha_bars[t] = prod;
  }
  return s;
}

Tensor q_sample(const Tensor& z0, std::size_t t, const Tensor& eps, const DiffusionSchedule& schedule) {
  FTM_REQUIRE(t < schedule.num_steps(), "q_sample: timestep " + std::to_string(t) + " outside [0, " +
                                            std::to_string(schedule.num_steps()) + ")");
  FTM_REQUIRE(z0.shape() == eps.shape(), "q_sample: noise shape must match the latent");
  const double a = std::sqrt(schedule.alpha_bars[t]);
  const double s = std::sqrt(1.0 - schedule.alpha_bars[t]);
  Tensor out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0[i] + s * eps[i];
  return out;
}

EpsModel as_eps_model(const Denoiser& model) {
  return [&model](const Tensor& z, std::span<const std::size_t> t, const Tensor& text) {
    return model.predict(z, t, text);
  };
}

NoisedBatch make_noised_batch(const Tensor& z0, const DiffusionSchedule& schedule, Rng& rng) {
  FTM_REQUIRE(z0.rank() == 3 && z0.dim(0) > 0, "training batch must be non-empty (B, L, C)");
  const std::size_t batch = z0.dim(0);
  const std::size_t row = z0.size() / batch;
  NoisedBatch nb{Tensor(z0.shape()), rng.normal_tensor(z0.shape()), std::vector<std::size_t>(batch)};
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t t = rng.uniform_index(schedule.num_steps());
    nb.t[b] = t;
    const double a = std::sqrt(schedule.alpha_bars[t]);
    const double s = std::sqrt(1.0 - schedule.alpha_bars[t]);
    for (std::size_t i = b * row; i < (b + 1) * row; ++i) nb.z_t[i] = a * z0[i] + s * nb.eps[i];
  }
  return nb;
}

double training_loss(const EpsModel& model, const Tensor& z0, const Tensor& text, const DiffusionSchedule& schedule,
                     Rng& rng) {
  const NoisedBatch nb = make_noised_batch(z0, schedule, rng);
  const Tensor pred = model(nb.z_t, nb.t, text);
  FTM_REQUIRE(pred.shape() == nb.eps.shape(), "training_loss: model output shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (nb.eps[i] - pred[i]) * (nb.eps[i] - pred[i]);
  return s / static_cast<double>(z0.dim(0));
}

Var training_loss(const Denoiser& model, const ParamVars& pv, const Tensor& z0, const Tensor& text,
                  const DiffusionSchedule& schedule, Rng& rng) {
  NoisedBatch nb = make_noised_batch(z0, schedule, rng);
  const Var pred = model.forward(pv, constant(std::move(nb.z_t)), nb.t, constant(text));
  return scale(sum_squares(sub(pred, constant(std::move(nb.eps)))), 1.0 / static_cast<double>(z0.dim(0)));
}

std::vector<std::size_t> strided_timesteps(std::size_t num_steps, std::size_t inference_steps) {
  FTM_REQUIRE(inference_steps >= 1 && inference_steps <= num_steps,
              "sampler: inference_steps must be in [1, " + std::to_string(num_steps) + "]");
  std::vector<std::size_t> ts(inference_steps);
  if (inference_steps == 1) {
    ts[0] = num_steps - 1;
    return ts;
  }
  for (std::size_t i = 0; i < inference_steps; ++i) {
    const std::size_t k = inference_steps - 1 - i;
    const double pos = static_cast<double>(k) * static_cast<double>(num_steps - 1) /
                       static_cast<double>(inference_steps - 1);
    ts[i] = static_cast<std::size_t>(std::llround(pos));
  }
  return ts;
}

Tensor sample(const Tensor& text, const EpsModel& model, const DiffusionSchedule& schedule,
              const SamplerConfig& sampler, std::size_t length, std::size_t width, std::size_t first_row) {
  FTM_REQUIRE(text.rank() == 2 && text.dim(0) > 0, "sample: text must be (B, E)");
  const std::size_t batch = text.dim(0);
  const std::size_t row = length * width;
  Tensor z({batch, length, width});
  for (std::size_t b = 0; b < batch; ++b) {
    Rng rng(derive_seed(sampler.seed, first_row + b));
    for (std::size_t i = 0; i < row; ++i) z[b * row + i] = rng.normal();
  }
  const Tensor uncond(text.shape());
  const auto ts = strided_timesteps(schedule.num_steps(), sampler.inference_steps);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const std::size_t t = ts[k];
    const std::vector<std::size_t> tv(batch, t);
    Tensor eps = model(z, tv, text);
    FTM_REQUIRE(eps.shape() == z.shape(), "sample: model output shape mismatch");
    if (sampler.guidance_scale != 1.0) {
      const Tensor eps_u = model(z, tv, uncond);
      for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = eps_u[i] + sampler.guidance_scale * (eps[i] - eps_u[i]);
    }
    const double ab = schedule.alpha_bars[t];
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    const bool last = k + 1 == ts.size();
    const double ab_prev = last ? 1.0 : schedule.alpha_bars[ts[k + 1]];
    const double pa = std::sqrt(ab_prev);
    const double pn = std::sqrt(1.0 - ab_prev);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double x0 = (z[i] - sn * eps[i]) / sa;
      z[i] = last ? x0 : pa * x0 + pn * eps[i];
    }
    if (checked_mode() && !z.all_finite()) throw NumericError("sample: non-finite latent at t = " + std::to_string(t));
  }
  return z;
}

// --- AdamW ------------------------------------------------------------------

AdamW::AdamW(AdamWConfig cfg, const ParameterSet& params) : cfg_(cfg) {
  for (const auto& e : params.entries()) {
    state_.m.emplace_back(e.value.shape());
    state_.v.emplace_back(e.value.shape());
  }
}

void AdamW::step(ParameterSet& params, const ParameterSet& grads) {
  FTM_REQUIRE(params.size() == grads.size() && params.size() == state_.m.size(),
              "AdamW::step: parameter/gradient/state count mismatch");
  ++state_.steps;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(state_.steps));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(state_.steps));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& e = params.entries()[p];
    if (e.frozen) continue;
    const Tensor& g = grads.entries()[p].value;
    Tensor& m = state_.m[p];
    Tensor& v = state_.v[p];
    FTM_REQUIRE(g.shape() == e.value.shape(), "AdamW::step: gradient shape mismatch for " + e.name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      e.value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * e.value[i]);
    }
  }
}

std::vector<double> train(const TrainingData& data, Denoiser& model, AdamW& optimizer,
                          const DiffusionSchedule& schedule, const TrainConfig& cfg,
                          const std::function<void(std::size_t, double)>& on_step) {
  FTM_REQUIRE(data.size() > 0, "train: corpus is empty");
  FTM_REQUIRE(cfg.batch_size > 0, "train: batch_size must be positive");
  const auto& mc = model.config();
  FTM_REQUIRE(data.sequences.dim(1) == mc.latent_length && data.sequences.dim(2) == mc.latent_dim,
              "train: corpus sequences " + shape_str(data.sequences.shape()) + " do not match the model latent (" +
                  std::to_string(mc.latent_length) + ", " + std::to_string(mc.latent_dim) + ")");
  FTM_REQUIRE(data.texts.dim(1) == mc.text_dim, "train: text embedding width does not match the model");
  FTM_REQUIRE(schedule.num_steps() == mc.num_steps, "train: schedule length does not match the model");

  const std::size_t row = mc.latent_length * mc.latent_dim;
  const std::size_t erow = mc.text_dim;
  std::vector<double> losses;
  while (optimizer.state().steps < cfg.total_steps) {
    const std::size_t step = optimizer.state().steps;
    Rng rng(derive_seed(cfg.seed, step));
    Tensor z0({cfg.batch_size, mc.latent_length, mc.latent_dim});
    Tensor text({cfg.batch_size, erow});
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t idx = rng.uniform_index(data.size());
      std::copy_n(data.sequences.ptr() + idx * row, row, z0.ptr() + b * row);
      std::copy_n(data.texts.ptr() + idx * erow, erow, text.ptr() + b * erow);
    }
    double loss_value = 0.0;
    const ParameterSet grads = gradient(
        [&](const ParamVars& pv) {
          Var loss = training_loss(model, pv, z0, text, schedule, rng);
          loss_value = loss.value()[0];
          return loss;
        },
        model.params());
    if (!std::isfinite(loss_value)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }
    optimizer.step(model.params(), grads);
    losses.push_back(loss_value);
    if (on_step) on_step(step, loss_value);
  }
  return losses;
}

}  // namespace ftm
