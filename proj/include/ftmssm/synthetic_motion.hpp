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

// Seeded synthetic motion corpus. Four families with constructed frequency
// content, each paired with a sentence built from a fixed template set:
//
//   static      constant pose plus small noise
//   walk        pose plus a low-frequency sinusoid
//   stumble     walk plus short alternating-sign bursts
//   transition  two poses blended over a window
//
// Plus the toy text encoder and the frozen motion feature extractor used by
// the metrics.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ftmssm/diffusion.hpp"
#include "ftmssm/tensor.hpp"

namespace ftm {

inline constexpr std::string_view kFamilies[] = {"static", "walk", "stumble", "transition"};
inline constexpr std::string_view kPoses[] = {"sitting", "standing", "lying"};

bool is_family(std::string_view name);

struct CorpusConfig {
  // (family, count) in generation order.
  std::vector<std::pair<std::string, std::size_t>> counts = {
      {"static", 128}, {"walk", 128}, {"stumble", 128}, {"transition", 128}};
  std::size_t length = 16;
  std::size_t channels = 32;
  double static_noise = 0.05;
  double motion_noise = 0.05;
  double burst_amplitude = 1.0;
  // Pose prototypes depend only on this, so corpora drawn with different
  // seeds share the same text-to-pose mapping.
  std::uint64_t prototype_seed = 1234;

  void validate() const;
  std::size_t total() const;
};

struct MotionSample {
  std::string family;
  std::uint64_t seed = 0;
  std::string text;
  Tensor sequence;  // (L, C)
};

struct Corpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  std::vector<MotionSample> samples;
};

// Prototype pose vectors (3, C).
Tensor pose_prototypes(const CorpusConfig& cfg);

// One sample of `family`; sample i of a corpus uses derive_seed(seed, i).
MotionSample generate_sample(const CorpusConfig& cfg, std::string_view family, std::uint64_t sample_seed);

Corpus generate_corpus(const CorpusConfig& cfg, std::uint64_t seed);

// Every sentence the generator can emit for `family`.
std::vector<std::string> family_templates(std::string_view family);

// Deterministic template pick for conditioning by class name.
std::string template_for(std::string_view family, std::uint64_t seed);

// Lower-cased alphanumeric tokens plus adjacent-token bigrams, each hashed
// (FNV-1a) to one of `width` buckets with a hash-derived sign; L2-normalized.
Tensor encode_text(std::string_view text, std::size_t width = 64);

// Sum of squared Haar detail coefficients over total energy, all channels.
double high_band_fraction(const Tensor& sequence);

class FeatureExtractor {
 public:
  // Projection (F, 4C) with N(0, 1/(4C)) entries drawn from `seed`.
  FeatureExtractor(std::size_t length, std::size_t channels, std::size_t features, std::uint64_t seed);

  // [temporal mean | temporal std | low-band energy | high-band energy] per
  // channel, projected to F dims without bias.
  Tensor raw_statistics(const Tensor& sequence) const;
  Tensor extract(const Tensor& sequence) const;
  // Rows of (n, L, C) -> (n, F).
  Tensor extract_batch(const Tensor& sequences) const;

  std::size_t features() const { return features_; }

 private:
  std::size_t length_;
  std::size_t channels_;
  std::size_t features_;
  Tensor projection_;
};

// Sequences stacked to (n, L, C) and encoded texts (n, E).
TrainingData to_training_data(const Corpus& corpus, std::size_t text_width);
Tensor encode_texts(const std::vector<std::string>& texts, std::size_t width);

// Line-delimited JSON: a header object {"format", "version", "seed",
// "config"} followed by one {"class", "seed", "text", "shape", "data"}
// object per sample.
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& text);
void write_corpus(const std::string& path, const Corpus& corpus);
Corpus read_corpus(const std::string& path);

}  // namespace ftm
