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

// End-to-end evaluation: generate motions for reference texts with the
// deterministic sampler, embed them with the frozen feature extractor, and
// compute every metric against the reference corpus.

#include <cstdint>
#include <string>
#include <vector>

#include "ftmssm/config.hpp"
#include "ftmssm/denoiser.hpp"
#include "ftmssm/diffusion.hpp"
#include "ftmssm/metrics.hpp"
#include "ftmssm/synthetic_motion.hpp"

namespace ftm {

// Texts plus (n, L, C) sequences, as produced by the sampler.
struct SampleSet {
  std::vector<std::string> texts;
  std::vector<std::string> classes;  // family name, or empty for free text
  Tensor sequences;
};

// Samples rows [0, n) in batches; row i always uses the noise of seed row
// first_row + i, so results do not depend on the batch size.
Tensor generate(const Denoiser& model, const DiffusionSchedule& schedule, const SamplerConfig& sampler,
                const std::vector<std::string>& texts, std::size_t first_row = 0, std::size_t batch = 64);

std::string samples_to_jsonl(const SampleSet& s, const std::string& config_echo);
SampleSet samples_from_jsonl(const std::string& text);
// Reads a samples file or a corpus file.
SampleSet read_sample_set(const std::string& path);
SampleSet corpus_sample_set(const Corpus& corpus);

struct MetricValues {
  std::size_t samples = 0;
  double fid = 0.0;
  RPrecision r_precision;
  double mm_dist = 0.0;
  double diversity = 0.0;
  double mmodality = 0.0;
  // The same alignment/dispersion metrics on the real reference subset.
  RPrecision real_r_precision;
  double real_mm_dist = 0.0;
  double real_diversity = 0.0;
  double diversity_gap = 0.0;  // |diversity - real_diversity|
};

struct EvalContext {
  const Corpus* reference = nullptr;
  MetricConfig metrics;
  std::size_t text_dim = 64;
};

// Rows of the reference corpus used as conditioning, chosen by metric_seed.
std::vector<std::size_t> eval_rows(const EvalContext& ctx);

// Minimum number of evaluation samples the metric configuration needs.
std::size_t required_samples(const MetricConfig& m);

// Metrics of a given generated set (aligned row by row with eval_rows()).
// mm_groups may be empty, in which case MModality is reported as 0.
MetricValues compute_metrics(const EvalContext& ctx, const Tensor& generated, const std::vector<Tensor>& mm_groups);

// Generates eval_rows() texts plus MModality groups with the model.
MetricValues evaluate_model(const EvalContext& ctx, const Denoiser& model, const DiffusionSchedule& schedule,
                            const SamplerConfig& sampler);

}  // namespace ftm
