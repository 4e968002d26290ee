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

#include "ftmssm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ftmssm/error.hpp"

namespace ftm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> k = {
      {"seed", "7", "root seed; all other seeds derive from it"},
      // model
      {"latent_length", "16", "frames per latent sequence"},
      {"latent_dim", "32", "latent channels"},
      {"channels", "32", "denoiser width"},
      {"states", "8", "SSM state size"},
      {"text_dim", "64", "text embedding width"},
      {"time_embed_dim", "32", "sinusoidal time embedding width"},
      {"encoder_layers", "1", "FTMamba layers in the encoder"},
      {"middle_layers", "1", "FTMamba layers in the middle stage"},
      {"decoder_layers", "1", "FTMamba layers in the decoder"},
      {"bidirectional", "true", "use a reverse-time scan in the frequency branch"},
      {"long_skip", "true", "add the input stem features to the decoder output"},
      {"head_scale", "8.0", "fixed multiplier on the zero-initialized head output"},
      // schedule
      {"num_steps", "1000", "diffusion timesteps"},
      {"beta_start", "0.00085", "first beta"},
      {"beta_end", "0.012", "last beta"},
      // sampler
      {"inference_steps", "50", "deterministic sampler steps"},
      {"guidance_scale", "1.0", "1 = plain conditional prediction"},
      // optimizer / training
      {"lr", "0.0001", "learning rate"},
      {"weight_decay", "0.01", "decoupled weight decay"},
      {"adam_beta1", "0.9", ""},
      {"adam_beta2", "0.999", ""},
      {"adam_eps", "1e-08", ""},
      {"train_steps", "2000", "total optimizer steps"},
      {"batch_size", "64", ""},
      // corpus
      {"count_static", "128", "samples of the static family (0 omits it)"},
      {"count_walk", "128", ""},
      {"count_stumble", "128", ""},
      {"count_transition", "128", ""},
      {"static_noise", "0.05", ""},
      {"motion_noise", "0.05", ""},
      {"burst_amplitude", "1.0", ""},
      {"prototype_seed", "1234", "seed of the pose prototypes"},
      // metrics
      {"feature_dim", "16", "motion feature width"},
      {"feature_seed", "2024", "seed of the frozen feature projection"},
      {"pool_size", "8", "R-precision pool size"},
      {"diversity_subset", "32", "Diversity subset size"},
      {"mm_groups", "8", "texts used for MModality"},
      {"mm_samples_per_group", "4", "generations per MModality text"},
      {"mm_pairs", "8", "sampled pairs per MModality group"},
      {"eval_samples", "256", "generated samples per evaluation"},
      {"metric_seed", "99", "seed of the metric subsets and pools"},
      {"aligner_ridge", "0.001", "ridge of the text-to-feature fit"},
  };
  return k;
}

RunConfig::RunConfig() {
  for (const auto& k : keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  FTM_REQUIRE(it != values_.end(), "unknown config key '" + key + "'");
  it->second = trim(value);
  // Type-check eagerly so errors point at the offending key.
  const std::string& def = [&]() -> const std::string& {
    for (const auto& k : keys())
      if (k.name == key) return k.default_value;
    return value;
  }();
  if (def == "true" || def == "false") {
    (void)get_bool(key);
  } else if (def.find_first_of(".e") != std::string::npos) {
    (void)get_double(key);
  } else {
    (void)get_u64(key);
  }
}

void RunConfig::parse(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    FTM_REQUIRE(eq != std::string::npos, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ContractViolation& e) {
      throw ContractViolation(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  FTM_REQUIRE(static_cast<bool>(in), "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  parse(ss.str(), path);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  FTM_REQUIRE(it != values_.end(), "unknown config key '" + key + "'");
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  FTM_REQUIRE(ec == std::errc() && p == v.data() + v.size(),
              "config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t RunConfig::get_size(const std::string& key) const { return static_cast<std::size_t>(get_u64(key)); }

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  FTM_REQUIRE(pos == v.size() && !v.empty() && std::isfinite(out),
              "config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ContractViolation("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::init_seed() const { return derive_seed(seed(), "init"); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed(), "train"); }
std::uint64_t RunConfig::sample_seed() const { return derive_seed(seed(), "sample"); }

DenoiserConfig RunConfig::model() const {
  DenoiserConfig c;
  c.latent_length = get_size("latent_length");
  c.latent_dim = get_size("latent_dim");
  c.channels = get_size("channels");
  c.states = get_size("states");
  c.text_dim = get_size("text_dim");
  c.time_embed_dim = get_size("time_embed_dim");
  c.encoder_layers = get_size("encoder_layers");
  c.middle_layers = get_size("middle_layers");
  c.decoder_layers = get_size("decoder_layers");
  c.bidirectional = get_bool("bidirectional");
  c.long_skip = get_bool("long_skip");
  c.head_scale = get_double("head_scale");
  c.num_steps = get_size("num_steps");
  return c;
}

DiffusionSchedule RunConfig::schedule() const {
  return DiffusionSchedule::linear(get_size("num_steps"), get_double("beta_start"), get_double("beta_end"));
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig s;
  s.inference_steps = get_size("inference_steps");
  s.seed = sample_seed();
  s.guidance_scale = get_double("guidance_scale");
  return s;
}

AdamWConfig RunConfig::optimizer() const {
  AdamWConfig a;
  a.lr = get_double("lr");
  a.beta1 = get_double("adam_beta1");
  a.beta2 = get_double("adam_beta2");
  a.eps = get_double("adam_eps");
  a.weight_decay = get_double("weight_decay");
  return a;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.total_steps = get_size("train_steps");
  t.batch_size = get_size("batch_size");
  t.seed = train_seed();
  return t;
}

CorpusConfig RunConfig::corpus() const {
  CorpusConfig c;
  c.counts.clear();
  for (std::string_view fam : kFamilies) {
    const std::size_t n = get_size("count_" + std::string(fam));
    if (n > 0) c.counts.emplace_back(std::string(fam), n);
  }
  c.length = get_size("latent_length");
  c.channels = get_size("latent_dim");
  c.static_noise = get_double("static_noise");
  c.motion_noise = get_double("motion_noise");
  c.burst_amplitude = get_double("burst_amplitude");
  c.prototype_seed = get_u64("prototype_seed");
  return c;
}

MetricConfig RunConfig::metrics() const {
  MetricConfig m;
  m.feature_dim = get_size("feature_dim");
  m.feature_seed = get_u64("feature_seed");
  m.pool_size = get_size("pool_size");
  m.diversity_subset = get_size("diversity_subset");
  m.mm_groups = get_size("mm_groups");
  m.mm_samples_per_group = get_size("mm_samples_per_group");
  m.mm_pairs = get_size("mm_pairs");
  m.eval_samples = get_size("eval_samples");
  m.metric_seed = get_u64("metric_seed");
  m.aligner_ridge = get_double("aligner_ridge");
  return m;
}

void RunConfig::validate() const {
  model().validate();
  corpus().validate();
  (void)schedule();
  const auto s = sampler();
  FTM_REQUIRE(s.inference_steps >= 1 && s.inference_steps <= get_size("num_steps"),
              "inference_steps must be in [1, num_steps]");
  const auto a = optimizer();
  FTM_REQUIRE(a.lr > 0.0, "lr must be positive");
  FTM_REQUIRE(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0, "adam betas must be in [0, 1)");
  FTM_REQUIRE(a.eps > 0.0 && a.weight_decay >= 0.0, "adam_eps must be positive, weight_decay non-negative");
  FTM_REQUIRE(get_size("batch_size") >= 1, "batch_size must be >= 1");
  const auto m = metrics();
  FTM_REQUIRE(m.feature_dim >= 1, "feature_dim must be >= 1");
  FTM_REQUIRE(m.pool_size >= 2, "pool_size must be >= 2");
  FTM_REQUIRE(m.diversity_subset >= 1, "diversity_subset must be >= 1");
  FTM_REQUIRE(m.mm_samples_per_group >= 2, "mm_samples_per_group must be >= 2");
  FTM_REQUIRE(m.aligner_ridge > 0.0, "aligner_ridge must be positive");
}

}  // namespace ftm
