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

#include "ftmssm/synthetic_motion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ftmssm/error.hpp"
#include "ftmssm/rng.hpp"
#include "ftmssm/wavelet.hpp"
#include "json.hpp"

namespace ftm {
namespace {

using nlohmann::json;

constexpr std::size_t kNumPoses = std::size(kPoses);
constexpr const char* kSpeeds[] = {"slowly", "quickly"};
constexpr const char* kStrides[] = {"short", "long"};
constexpr const char* kBursts[] = {"once", "twice"};
constexpr const char* kBlends[] = {"suddenly", "gradually"};

std::string walk_text(std::size_t pose, std::size_t speed, std::size_t stride) {
  return "a " + std::string(kPoses[pose]) + " person walks " + kSpeeds[speed] + " with " + kStrides[stride] +
         " strides";
}
std::string stumble_text(std::size_t pose, std::size_t speed, std::size_t bursts) {
  return "a " + std::string(kPoses[pose]) + " person walks " + kSpeeds[speed] + " and stumbles " + kBursts[bursts];
}
std::string static_text(std::size_t pose) { return "a person stays still while " + std::string(kPoses[pose]); }
std::string transition_text(std::size_t from, std::size_t to, std::size_t blend) {
  return "a person goes from " + std::string(kPoses[from]) + " to " + std::string(kPoses[to]) + " " + kBlends[blend];
}

// Pose + per-sample jitter.
std::vector<double> jittered_pose(const Tensor& protos, std::size_t pose, Rng& rng) {
  const std::size_t c = protos.dim(1);
  std::vector<double> p(c);
  for (std::size_t j = 0; j < c; ++j) p[j] = protos[pose * c + j] + 0.1 * rng.normal();
  return p;
}

// Fills `out` with pose + amp * g_c * sin(2 pi f t / L + phi_c).
void add_gait(Tensor& out, double cycles, double amp, Rng& rng) {
  const std::size_t len = out.dim(0);
  const std::size_t c = out.dim(1);
  for (std::size_t j = 0; j < c; ++j) {
    const double gain = rng.uniform(0.5, 1.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < len; ++t) {
      out[t * c + j] += amp * gain * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) /
                                                  static_cast<double>(len) + phase);
    }
  }
}

void add_noise(Tensor& out, double sigma, Rng& rng) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
}

Tensor constant_pose(const std::vector<double>& pose, std::size_t len) {
  const std::size_t c = pose.size();
  Tensor out({len, c});
  for (std::size_t t = 0; t < len; ++t) std::copy(pose.begin(), pose.end(), out.ptr() + t * c);
  return out;
}

json config_to_json(const CorpusConfig& cfg) {
  json counts = json::array();
  for (const auto& [fam, n] : cfg.counts) counts.push_back({fam, n});
  return json{{"counts", counts},
              {"length", cfg.length},
              {"channels", cfg.channels},
              {"static_noise", cfg.static_noise},
              {"motion_noise", cfg.motion_noise},
              {"burst_amplitude", cfg.burst_amplitude},
              {"prototype_seed", cfg.prototype_seed}};
}

CorpusConfig config_from_json(const json& j) {
  CorpusConfig cfg;
  cfg.counts.clear();
  for (const auto& e : j.at("counts")) cfg.counts.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::size_t>());
  cfg.length = j.at("length").get<std::size_t>();
  cfg.channels = j.at("channels").get<std::size_t>();
  cfg.static_noise = j.at("static_noise").get<double>();
  cfg.motion_noise = j.at("motion_noise").get<double>();
  cfg.burst_amplitude = j.at("burst_amplitude").get<double>();
  cfg.prototype_seed = j.at("prototype_seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

bool is_family(std::string_view name) {
  return std::find(std::begin(kFamilies), std::end(kFamilies), name) != std::end(kFamilies);
}

void CorpusConfig::validate() const {
  FTM_REQUIRE(!counts.empty(), "corpus: no families requested");
  for (const auto& [fam, n] : counts) {
    FTM_REQUIRE(is_family(fam), "corpus: unknown family '" + fam + "'");
    FTM_REQUIRE(n >= 1, "corpus: count for '" + fam + "' must be >= 1");
  }
  FTM_REQUIRE(length >= 8, "corpus: length must be >= 8");
  FTM_REQUIRE(channels >= 1, "corpus: channels must be >= 1");
  FTM_REQUIRE(static_noise >= 0.0 && motion_noise >= 0.0 && burst_amplitude >= 0.0,
              "corpus: noise levels must be non-negative");
}

std::size_t CorpusConfig::total() const {
  std::size_t n = 0;
  for (const auto& e : counts) n += e.second;
  return n;
}

Tensor pose_prototypes(const CorpusConfig& cfg) {
  Rng rng(derive_seed(cfg.prototype_seed, "poses"));
  return rng.normal_tensor({kNumPoses, cfg.channels});
}

MotionSample generate_sample(const CorpusConfig& cfg, std::string_view family, std::uint64_t sample_seed) {
  FTM_REQUIRE(is_family(family), "unknown motion family '" + std::string(family) + "'");
  const Tensor protos = pose_prototypes(cfg);
  Rng rng(sample_seed);
  const std::size_t len = cfg.length;
  const std::size_t c = cfg.channels;
  MotionSample s{std::string(family), sample_seed, {}, {}};

  if (family == "static") {
    const std::size_t pose = rng.uniform_index(kNumPoses);
    s.sequence = constant_pose(jittered_pose(protos, pose, rng), len);
    add_noise(s.sequence, cfg.static_noise, rng);
    s.text = static_text(pose);
  } else if (family == "walk") {
    const std::size_t pose = rng.uniform_index(kNumPoses);
    const std::size_t speed = rng.uniform_index(2);
    const std::size_t stride = rng.uniform_index(2);
    s.sequence = constant_pose(jittered_pose(protos, pose, rng), len);
    add_gait(s.sequence, speed == 0 ? 1.0 : 2.0, stride == 0 ? 0.5 : 1.0, rng);
    add_noise(s.sequence, cfg.motion_noise, rng);
    s.text = walk_text(pose, speed, stride);
  } else if (family == "stumble") {
    const std::size_t pose = rng.uniform_index(kNumPoses);
    const std::size_t speed = rng.uniform_index(2);
    const std::size_t bursts = rng.uniform_index(2);
    s.sequence = constant_pose(jittered_pose(protos, pose, rng), len);
    add_gait(s.sequence, speed == 0 ? 1.0 : 2.0, 0.75, rng);
    for (std::size_t b = 0; b <= bursts; ++b) {
      // Three frames of alternating sign: energy concentrated in the detail band.
      const std::size_t t0 = 1 + rng.uniform_index(len - 4);
      for (std::size_t j = 0; j < c; ++j) {
        const double r = cfg.burst_amplitude * rng.normal();
        for (std::size_t k = 0; k < 3; ++k) s.sequence[(t0 + k) * c + j] += (k % 2 == 0 ? r : -r);
      }
    }
    add_noise(s.sequence, cfg.motion_noise, rng);
    s.text = stumble_text(pose, speed, bursts);
  } else {
    const std::size_t from = rng.uniform_index(kNumPoses);
    const std::size_t to = (from + 1 + rng.uniform_index(kNumPoses - 1)) % kNumPoses;
    const std::size_t blend = rng.uniform_index(2);
    const auto pa = jittered_pose(protos, from, rng);
    const auto pb = jittered_pose(protos, to, rng);
    const double window = blend == 0 ? 2.0 : static_cast<double>(len) / 2.0;
    const double center = rng.uniform(static_cast<double>(len) * 0.375, static_cast<double>(len) * 0.625);
    s.sequence = Tensor({len, c});
    for (std::size_t t = 0; t < len; ++t) {
      const double w = std::clamp((static_cast<double>(t) - center + window / 2.0) / window, 0.0, 1.0);
      for (std::size_t j = 0; j < c; ++j) s.sequence[t * c + j] = (1.0 - w) * pa[j] + w * pb[j];
    }
    add_noise(s.sequence, cfg.motion_noise, rng);
    s.text = transition_text(from, to, blend);
  }
  return s;
}

Corpus generate_corpus(const CorpusConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Corpus corpus{cfg, seed, {}};
  corpus.samples.reserve(cfg.total());
  std::size_t index = 0;
  for (const auto& [fam, n] : cfg.counts) {
    for (std::size_t i = 0; i < n; ++i, ++index) {
      corpus.samples.push_back(generate_sample(cfg, fam, derive_seed(seed, index)));
    }
  }
  return corpus;
}

std::vector<std::string> family_templates(std::string_view family) {
  FTM_REQUIRE(is_family(family), "unknown motion family '" + std::string(family) + "'");
  std::vector<std::string> out;
  for (std::size_t p = 0; p < kNumPoses; ++p) {
    if (family == "static") {
      out.push_back(static_text(p));
    } else if (family == "walk") {
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) out.push_back(walk_text(p, a, b));
    } else if (family == "stumble") {
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) out.push_back(stumble_text(p, a, b));
    } else {
      for (std::size_t q = 0; q < kNumPoses; ++q) {
        if (q == p) continue;
        for (std::size_t b = 0; b < 2; ++b) out.push_back(transition_text(p, q, b));
      }
    }
  }
  return out;
}

std::string template_for(std::string_view family, std::uint64_t seed) {
  const auto all = family_templates(family);
  Rng rng(seed);
  return all[rng.uniform_index(all.size())];
}

Tensor encode_text(std::string_view text, std::size_t width) {
  FTM_REQUIRE(width >= 1, "encode_text: width must be >= 1");
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  FTM_REQUIRE(!tokens.empty(), "encode_text: text has no tokens");

  std::vector<std::string> grams = tokens;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) grams.push_back(tokens[i] + " " + tokens[i + 1]);

  Tensor v({width});
  for (const auto& g : grams) {
    const std::uint64_t h = fnv1a64(g);
    v[h % width] += (h >> 63) ? -1.0 : 1.0;
  }
  double n2 = 0.0;
  for (double x : v.vec()) n2 += x * x;
  if (n2 == 0.0) {
    // Every token cancelled out; fall back to an unsigned count.
    for (const auto& g : grams) v[fnv1a64(g) % width] += 1.0;
    n2 = 0.0;
    for (double x : v.vec()) n2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (std::size_t i = 0; i < width; ++i) v[i] *= inv;
  return v;
}

double high_band_fraction(const Tensor& sequence) {
  FTM_REQUIRE(sequence.rank() == 2 && sequence.dim(0) >= 2, "high_band_fraction: need an (L >= 2, C) sequence");
  const FreqBands b = dwt_haar(sequence);
  double lo = 0.0, hi = 0.0;
  for (double x : b.low.vec()) lo += x * x;
  for (double x : b.high.vec()) hi += x * x;
  return lo + hi > 0.0 ? hi / (lo + hi) : 0.0;
}

FeatureExtractor::FeatureExtractor(std::size_t length, std::size_t channels, std::size_t features, std::uint64_t seed)
    : length_(length), channels_(channels), features_(features) {
  FTM_REQUIRE(length >= 2 && channels >= 1 && features >= 1, "FeatureExtractor: invalid dimensions");
  Rng rng(derive_seed(seed, "feature-projection"));
  projection_ = rng.normal_tensor({features, 4 * channels}, 1.0 / std::sqrt(4.0 * static_cast<double>(channels)));
}

Tensor FeatureExtractor::raw_statistics(const Tensor& x) const {
  FTM_REQUIRE(x.rank() == 2 && x.dim(0) == length_ && x.dim(1) == channels_,
              "extract_features: expected (" + std::to_string(length_) + ", " + std::to_string(channels_) +
                  ") sequence, got " + shape_str(x.shape()));
  const std::size_t c = channels_;
  const double inv_len = 1.0 / static_cast<double>(length_);
  Tensor stats({4 * c});
  for (std::size_t j = 0; j < c; ++j) {
    double m = 0.0;
    for (std::size_t t = 0; t < length_; ++t) m += x[t * c + j];
    m *= inv_len;
    double var = 0.0;
    for (std::size_t t = 0; t < length_; ++t) var += (x[t * c + j] - m) * (x[t * c + j] - m);
    stats[j] = m;
    stats[c + j] = std::sqrt(var * inv_len);
  }
  const FreqBands b = dwt_haar(x);
  for (std::size_t k = 0; k < b.low.dim(0); ++k) {
    for (std::size_t j = 0; j < c; ++j) {
      stats[2 * c + j] += b.low[k * c + j] * b.low[k * c + j] * inv_len;
      stats[3 * c + j] += b.high[k * c + j] * b.high[k * c + j] * inv_len;
    }
  }
  return stats;
}

Tensor FeatureExtractor::extract(const Tensor& sequence) const {
  const Tensor s = raw_statistics(sequence);
  Tensor f({features_});
  const std::size_t w = 4 * channels_;
  for (std::size_t i = 0; i < features_; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < w; ++k) acc += projection_[i * w + k] * s[k];
    f[i] = acc;
  }
  return f;
}

Tensor FeatureExtractor::extract_batch(const Tensor& sequences) const {
  FTM_REQUIRE(sequences.rank() == 3, "extract_batch: expected (n, L, C)");
  const std::size_t n = sequences.dim(0);
  const std::size_t row = length_ * channels_;
  FTM_REQUIRE(sequences.dim(1) * sequences.dim(2) == row, "extract_batch: sequence shape mismatch");
  Tensor out({n, features_});
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x({length_, channels_}, std::vector<double>(sequences.ptr() + i * row, sequences.ptr() + (i + 1) * row));
    const Tensor f = extract(x);
    std::copy(f.vec().begin(), f.vec().end(), out.ptr() + i * features_);
  }
  return out;
}

Tensor encode_texts(const std::vector<std::string>& texts, std::size_t width) {
  Tensor out({texts.size(), width});
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const Tensor e = encode_text(texts[i], width);
    std::copy(e.vec().begin(), e.vec().end(), out.ptr() + i * width);
  }
  return out;
}

TrainingData to_training_data(const Corpus& corpus, std::size_t text_width) {
  const std::size_t n = corpus.samples.size();
  FTM_REQUIRE(n > 0, "corpus is empty");
  const std::size_t len = corpus.samples[0].sequence.dim(0);
  const std::size_t c = corpus.samples[0].sequence.dim(1);
  TrainingData d{Tensor({n, len, c}), Tensor()};
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = corpus.samples[i].sequence;
    FTM_REQUIRE(s.shape() == (Shape{len, c}), "corpus: sample " + std::to_string(i) + " has inconsistent shape");
    std::copy(s.vec().begin(), s.vec().end(), d.sequences.ptr() + i * len * c);
    texts.push_back(corpus.samples[i].text);
  }
  d.texts = encode_texts(texts, text_width);
  return d;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream os;
  json header{{"format", "ftmssm-corpus"}, {"version", 1}, {"seed", corpus.seed},
              {"config", config_to_json(corpus.config)}};
  os << header.dump() << '\n';
  for (const auto& s : corpus.samples) {
    json rec{{"class", s.family},
             {"seed", s.seed},
             {"text", s.text},
             {"shape", s.sequence.shape()},
             {"data", s.sequence.vec()}};
    os << rec.dump() << '\n';
  }
  return os.str();
}

Corpus corpus_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("corpus: empty file");
  Corpus corpus;
  try {
    const json header = json::parse(line);
    if (header.at("format") != "ftmssm-corpus") throw FormatError("corpus: unrecognised format tag");
    if (header.at("version").get<int>() != 1) {
      throw FormatError("corpus: version " + header.at("version").dump() + " is not supported (expected 1)");
    }
    corpus.seed = header.at("seed").get<std::uint64_t>();
    corpus.config = config_from_json(header.at("config"));
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json rec = json::parse(line);
      MotionSample s;
      s.family = rec.at("class").get<std::string>();
      if (!is_family(s.family)) throw FormatError("corpus line " + std::to_string(lineno) + ": unknown class");
      s.seed = rec.at("seed").get<std::uint64_t>();
      s.text = rec.at("text").get<std::string>();
      s.sequence = Tensor(rec.at("shape").get<Shape>(), rec.at("data").get<std::vector<double>>());
      corpus.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("corpus: malformed record: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("corpus: ") + e.what());
  }
  if (corpus.samples.empty()) throw FormatError("corpus: no samples");
  return corpus;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  out << corpus_to_jsonl(corpus);
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open corpus '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return corpus_from_jsonl(ss.str());
}

}  // namespace ftm
