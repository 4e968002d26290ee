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

// Run configuration: a flat set of typed keys with defaults, read from a
// plain-text file ("key = value", '#' starts a comment) and overridable
// per key. The effective configuration is echoed into every artifact.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftmssm/denoiser.hpp"
#include "ftmssm/diffusion.hpp"
#include "ftmssm/synthetic_motion.hpp"

namespace ftm {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

struct MetricConfig {
  std::size_t feature_dim = 16;
  std::uint64_t feature_seed = 2024;
  std::size_t pool_size = 8;
  std::size_t diversity_subset = 32;
  std::size_t mm_groups = 8;
  std::size_t mm_samples_per_group = 4;
  std::size_t mm_pairs = 8;
  std::size_t eval_samples = 256;
  std::uint64_t metric_seed = 99;
  double aligner_ridge = 1e-3;
};

class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey>& keys();

  // Unknown keys and malformed values raise ContractViolation.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  void parse(const std::string& text, const std::string& origin = "<string>");

  const std::string& get(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Sorted "key = value" lines.
  std::string echo() const;

  std::uint64_t seed() const { return get_u64("seed"); }
  std::uint64_t init_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t sample_seed() const;

  DenoiserConfig model() const;
  DiffusionSchedule schedule() const;
  SamplerConfig sampler() const;
  AdamWConfig optimizer() const;
  TrainConfig train() const;
  CorpusConfig corpus() const;
  MetricConfig metrics() const;

  // Validates every section; throws ContractViolation naming the problem.
  void validate() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ftm
