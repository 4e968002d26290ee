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

#include "ftmssm/denoiser.hpp"

#include <cmath>
#include <vector>

#include "ftmssm/error.hpp"
#include "ftmssm/freq_mamba.hpp"
#include "ftmssm/layers.hpp"
#include "ftmssm/ops.hpp"
#include "ftmssm/text_mamba.hpp"

namespace ftm {

void DenoiserConfig::validate() const {
  FTM_REQUIRE(latent_length >= 2 && latent_length % 2 == 0, "DenoiserConfig: latent_length must be even and >= 2");
  FTM_REQUIRE(latent_dim > 0 && channels > 0 && states > 0 && text_dim > 0,
              "DenoiserConfig: widths must be positive");
  FTM_REQUIRE(time_embed_dim >= 2 && time_embed_dim % 2 == 0, "DenoiserConfig: time_embed_dim must be even");
  FTM_REQUIRE(encoder_layers > 0 && middle_layers > 0 && decoder_layers > 0,
              "DenoiserConfig: every stage needs at least one layer");
  FTM_REQUIRE(num_steps > 0, "DenoiserConfig: num_steps must be positive");
  FTM_REQUIRE(std::isfinite(head_scale) && head_scale > 0.0, "DenoiserConfig: head_scale must be positive");
}

DenoiserConfig DenoiserConfig::full_scale() {
  DenoiserConfig c;
  c.latent_dim = 256;
  c.channels = 256;
  c.text_dim = 256;
  c.time_embed_dim = 256;
  c.encoder_layers = c.middle_layers = c.decoder_layers = 2;
  return c;
}

DenoiserConfig DenoiserConfig::tiny() {
  DenoiserConfig c;
  c.latent_length = 8;
  c.latent_dim = 8;
  c.channels = 8;
  c.states = 4;
  c.text_dim = 8;
  c.time_embed_dim = 8;
  return c;
}

Tensor time_embedding(std::size_t t, std::size_t dim, std::size_t num_steps) {
  FTM_REQUIRE(t < num_steps, "time_embedding: timestep " + std::to_string(t) + " outside [0, " +
                                 std::to_string(num_steps) + ")");
  FTM_REQUIRE(dim >= 2 && dim % 2 == 0, "time_embedding: dim must be even and >= 2");
  const std::size_t half = dim / 2;
  Tensor e({dim});
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = static_cast<double>(t) * freq;
    e[i] = std::sin(arg);
    e[half + i] = std::cos(arg);
  }
  return e;
}

void init_ftmamba_layer(ParameterSet& ps, const std::string& prefix, const DenoiserConfig& cfg, Rng& rng) {
  const std::size_t c = cfg.channels;
  ps.add(join(prefix, "time_in.w"), rng.normal_tensor({3, c, c}, 1.0 / std::sqrt(3.0 * static_cast<double>(c))));
  ps.add(join(prefix, "time_in.b"), Tensor({c}));
  init_linear(ps, join(prefix, "time_proj"), c, c, rng, /*with_bias=*/false);
  init_freq_mamba_block(ps, join(prefix, "freq"), c, cfg.states, rng, cfg.bidirectional);
  init_text_mamba_block(ps, join(prefix, "text"), c, cfg.states, cfg.text_dim, rng);
}

Var ftmamba_layer(const ParamVars& pv, const std::string& prefix, const Var& z_t, const Var& t_feat, const Var& text,
                  bool bidirectional) {
  const Var conv = conv1d_same(z_t, pv[join(prefix, "time_in.w")], pv[join(prefix, "time_in.b")]);
  const Var f_m = add_over_time(conv, apply_linear(pv, join(prefix, "time_proj"), t_feat, false));
  const Var f_n = freq_mamba_block(pv, join(prefix, "freq"), f_m, bidirectional);
  const Var f_u = add(z_t, f_n);
  const Var f_v = text_mamba_block(pv, join(prefix, "text"), f_u, text);
  return add(f_n, f_v);
}

Denoiser::Denoiser(DenoiserConfig cfg, ParameterSet params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
}

std::string Denoiser::layer_prefix(const char* stage, std::size_t i) const {
  return std::string(stage) + "." + std::to_string(i);
}

Denoiser Denoiser::create(const DenoiserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterSet ps;
  {
    Rng rng(derive_seed(seed, "in_proj"));
    init_linear(ps, "in_proj", cfg.latent_dim, cfg.channels, rng);
  }
  {
    Rng rng(derive_seed(seed, "time_mlp"));
    init_linear(ps, "time_mlp.0", cfg.time_embed_dim, cfg.channels, rng);
    init_linear(ps, "time_mlp.1", cfg.channels, cfg.channels, rng);
  }
  auto add_stage = [&](const char* stage, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::string prefix = std::string(stage) + "." + std::to_string(i);
      Rng rng(derive_seed(seed, prefix));
      init_ftmamba_layer(ps, prefix, cfg, rng);
    }
  };
  add_stage("enc", cfg.encoder_layers);
  add_stage("mid", cfg.middle_layers);
  add_stage("dec", cfg.decoder_layers);
  ps.add("head.w", Tensor({cfg.channels, cfg.latent_dim}));
  ps.add("head.b", Tensor({cfg.latent_dim}));
  return Denoiser(cfg, std::move(ps));
}

Var Denoiser::time_features(const ParamVars& pv, std::span<const std::size_t> t) const {
  Tensor emb({t.size(), cfg_.time_embed_dim});
  for (std::size_t b = 0; b < t.size(); ++b) {
    const Tensor e = time_embedding(t[b], cfg_.time_embed_dim, cfg_.num_steps);
    std::copy(e.ptr(), e.ptr() + e.size(), emb.ptr() + b * cfg_.time_embed_dim);
  }
  return apply_linear(pv, "time_mlp.1", silu(apply_linear(pv, "time_mlp.0", constant(std::move(emb)))));
}

Var Denoiser::forward(const ParamVars& pv, const Var& z_t, std::span<const std::size_t> t, const Var& text) const {
  FTM_REQUIRE(z_t.value().rank() == 3 && z_t.dim(1) == cfg_.latent_length && z_t.dim(2) == cfg_.latent_dim,
              "Denoiser: latent must be (B, " + std::to_string(cfg_.latent_length) + ", " +
                  std::to_string(cfg_.latent_dim) + "), got " + shape_str(z_t.shape()));
  const std::size_t batch = z_t.dim(0);
  FTM_REQUIRE(t.size() == batch, "Denoiser: need one timestep per batch row");
  FTM_REQUIRE(text.value().rank() == 2 && text.dim(0) == batch && text.dim(1) == cfg_.text_dim,
              "Denoiser: text embedding must be (B, " + std::to_string(cfg_.text_dim) + ")");

  const Var t_feat = time_features(pv, t);
  const Var stem = apply_linear(pv, "in_proj", z_t);
  Var h = stem;
  std::vector<Var> skips;
  for (std::size_t i = 0; i < cfg_.encoder_layers; ++i) {
    h = ftmamba_layer(pv, layer_prefix("enc", i), h, t_feat, text, cfg_.bidirectional);
    skips.push_back(h);
  }
  for (std::size_t i = 0; i < cfg_.middle_layers; ++i) {
    h = ftmamba_layer(pv, layer_prefix("mid", i), h, t_feat, text, cfg_.bidirectional);
  }
  for (std::size_t i = 0; i < cfg_.decoder_layers; ++i) {
    if (!skips.empty()) {
      h = add(h, skips.back());
      skips.pop_back();
    }
    h = ftmamba_layer(pv, layer_prefix("dec", i), h, t_feat, text, cfg_.bidirectional);
  }
  if (cfg_.long_skip) h = add(h, stem);
  const Var out = apply_linear(pv, "head", h);
  return cfg_.head_scale == 1.0 ? out : scale(out, cfg_.head_scale);
}

Tensor Denoiser::predict(const Tensor& z_t, std::span<const std::size_t> t, const Tensor& text) const {
  ParamVars pv(params_, false);
  return forward(pv, constant(z_t), t, constant(text)).value();
}

}  // namespace ftm
