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

// The noise-prediction network eps(z_t, t, f_t): stacked FTMamba layers in
// encoder / middle / decoder stages at constant width, with additive skips
// from each encoder layer to its mirrored decoder layer.

#include <cstdint>
#include <span>
#include <string>

#include "ftmssm/autograd.hpp"
#include "ftmssm/rng.hpp"

namespace ftm {

struct DenoiserConfig {
  std::size_t latent_length = 16;
  std::size_t latent_dim = 32;
  std::size_t channels = 32;
  std::size_t states = 8;
  std::size_t text_dim = 64;
  std::size_t time_embed_dim = 32;
  std::size_t encoder_layers = 1;
  std::size_t middle_layers = 1;
  std::size_t decoder_layers = 1;
  bool bidirectional = true;
  // Adds the input stem features to the decoder output before the head.
  bool long_skip = true;
  // Fixed multiplier on the (zero-initialized) head output.
  double head_scale = 8.0;
  std::size_t num_steps = 1000;  // valid timesteps are [0, num_steps)

  void validate() const;

  // 16 x 256 latent, 256 channels, 2 layers per stage, 256-wide text.
  static DenoiserConfig full_scale();
  // Gradient-check size: L = 8, C = 8, N = 4.
  static DenoiserConfig tiny();
};

// Sinusoidal embedding: [sin(t w_i) | cos(t w_i)], w_i = 10000^(-i / (dim/2)).
Tensor time_embedding(std::size_t t, std::size_t dim, std::size_t num_steps = 1000);

// <prefix>: time_in.w (3, C, C) and .b (C), time_proj.w (C, C), freq.*, text.*
void init_ftmamba_layer(ParameterSet& ps, const std::string& prefix, const DenoiserConfig& cfg, Rng& rng);

// f_m = conv(z_t) + time_proj(t_feat);  f_n = FreqMamba(f_m);
// f_u = z_t + f_n;  f_v = TextMamba(f_u, text);  returns f_n + f_v.
// z_t (B, L, C), t_feat (B, C), text (B, E).
Var ftmamba_layer(const ParamVars& pv, const std::string& prefix, const Var& z_t, const Var& t_feat, const Var& text,
                  bool bidirectional);

class Denoiser {
 public:
  Denoiser(DenoiserConfig cfg, ParameterSet params);

  // Seeded initialization; the output head starts at zero.
  static Denoiser create(const DenoiserConfig& cfg, std::uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  // z_t (B, L, latent_dim), one timestep per batch row, text (B, E).
  Var forward(const ParamVars& pv, const Var& z_t, std::span<const std::size_t> t, const Var& text) const;

  // Inference without gradient tracking.
  Tensor predict(const Tensor& z_t, std::span<const std::size_t> t, const Tensor& text) const;

  // Time features (B, C) from the sinusoidal embedding through the time MLP.
  Var time_features(const ParamVars& pv, std::span<const std::size_t> t) const;

  std::string layer_prefix(const char* stage, std::size_t i) const;

 private:
  DenoiserConfig cfg_;
  ParameterSet params_;
};

}  // namespace ftm
