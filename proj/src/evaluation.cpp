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

#include "ftmssm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ftmssm/error.hpp"
#include "json.hpp"

namespace ftm {
namespace {

using nlohmann::json;

Tensor rows_of(const Tensor& x, const std::vector<std::size_t>& rows) {
  Shape shape = x.shape();
  const std::size_t row = x.size() / shape[0];
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(x.ptr() + rows[i] * row, row, out.ptr() + i * row);
  return out;
}

}  // namespace

Tensor generate(const Denoiser& model, const DiffusionSchedule& schedule, const SamplerConfig& sampler,
                const std::vector<std::string>& texts, std::size_t first_row, std::size_t batch) {
  FTM_REQUIRE(!texts.empty(), "generate: no texts");
  FTM_REQUIRE(batch >= 1, "generate: batch must be >= 1");
  const auto& cfg = model.config();
  const std::size_t row = cfg.latent_length * cfg.latent_dim;
  const EpsModel eps = as_eps_model(model);
  Tensor out({texts.size(), cfg.latent_length, cfg.latent_dim});
  for (std::size_t start = 0; start < texts.size(); start += batch) {
    const std::size_t n = std::min(batch, texts.size() - start);
    const std::vector<std::string> chunk(texts.begin() + start, texts.begin() + start + n);
    const Tensor z = sample(encode_texts(chunk, cfg.text_dim), eps, schedule, sampler, cfg.latent_length,
                            cfg.latent_dim, first_row + start);
    std::copy_n(z.ptr(), n * row, out.ptr() + start * row);
  }
  return out;
}

std::string samples_to_jsonl(const SampleSet& s, const std::string& config_echo) {
  const std::size_t n = s.texts.size();
  FTM_REQUIRE(s.sequences.rank() == 3 && s.sequences.dim(0) == n, "samples: texts and sequences must be paired");
  const std::size_t len = s.sequences.dim(1), c = s.sequences.dim(2);
  std::ostringstream os;
  os << json{{"format", "ftmssm-samples"}, {"version", 1}, {"config", config_echo}}.dump() << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> data(s.sequences.ptr() + i * len * c, s.sequences.ptr() + (i + 1) * len * c);
    os << json{{"row", i},
               {"class", i < s.classes.size() ? s.classes[i] : std::string()},
               {"text", s.texts[i]},
               {"shape", {len, c}},
               {"data", data}}
              .dump()
       << '\n';
  }
  return os.str();
}

SampleSet samples_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  SampleSet s;
  std::vector<double> all;
  Shape shape;
  try {
    if (!std::getline(is, line)) throw FormatError("samples: empty file");
    const json header = json::parse(line);
    if (header.at("format") != "ftmssm-samples") throw FormatError("samples: unrecognised format tag");
    if (header.at("version").get<int>() != 1) throw FormatError("samples: unsupported version");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      const Shape sh = rec.at("shape").get<Shape>();
      if (shape.empty()) shape = sh;
      if (sh != shape || sh.size() != 2) throw FormatError("samples: inconsistent record shapes");
      const auto d = rec.at("data").get<std::vector<double>>();
      if (d.size() != shape_numel(sh)) throw FormatError("samples: record data length mismatch");
      all.insert(all.end(), d.begin(), d.end());
      s.texts.push_back(rec.at("text").get<std::string>());
      s.classes.push_back(rec.at("class").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("samples: malformed record: ") + e.what());
  }
  if (s.texts.empty()) throw FormatError("samples: no records");
  s.sequences = Tensor({s.texts.size(), shape[0], shape[1]}, std::move(all));
  return s;
}

SampleSet corpus_sample_set(const Corpus& corpus) {
  SampleSet s;
  const TrainingData d = to_training_data(corpus, 1);
  s.sequences = d.sequences;
  for (const auto& m : corpus.samples) {
    s.texts.push_back(m.text);
    s.classes.push_back(m.family);
  }
  return s;
}

SampleSet read_sample_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find("\"ftmssm-corpus\"") != std::string::npos && text.find("\"ftmssm-corpus\"") < text.find('\n')) {
    return corpus_sample_set(corpus_from_jsonl(text));
  }
  return samples_from_jsonl(text);
}

std::vector<std::size_t> eval_rows(const EvalContext& ctx) {
  FTM_REQUIRE(ctx.reference != nullptr, "evaluation: no reference corpus");
  const std::size_t total = ctx.reference->samples.size();
  const std::size_t n = std::min(ctx.metrics.eval_samples, total);
  Rng rng(derive_seed(ctx.metrics.metric_seed, "eval-rows"));
  auto perm = rng.permutation(total);
  perm.resize(n);
  return perm;
}

std::size_t required_samples(const MetricConfig& m) {
  return std::max({m.pool_size, 2 * m.diversity_subset, m.mm_groups, std::size_t{2}});
}

MetricValues compute_metrics(const EvalContext& ctx, const Tensor& generated, const std::vector<Tensor>& mm_groups) {
  const auto rows = eval_rows(ctx);
  const MetricConfig& m = ctx.metrics;
  const std::size_t need = required_samples(m);
  FTM_REQUIRE(rows.size() >= need, "evaluation needs at least " + std::to_string(need) + " samples (pool_size " +
                                       std::to_string(m.pool_size) + ", diversity_subset " +
                                       std::to_string(m.diversity_subset) + "), have " +
                                       std::to_string(rows.size()));
  FTM_REQUIRE(generated.rank() == 3 && generated.dim(0) == rows.size(),
              "evaluation: expected " + std::to_string(rows.size()) + " generated samples, got " +
                  (generated.rank() == 3 ? std::to_string(generated.dim(0)) : shape_str(generated.shape())));

  const Corpus& ref = *ctx.reference;
  const TrainingData real = to_training_data(ref, ctx.text_dim);
  FTM_REQUIRE(generated.dim(1) == real.sequences.dim(1) && generated.dim(2) == real.sequences.dim(2),
              "evaluation: generated sequences do not match the reference shape");
  const FeatureExtractor fx(real.sequences.dim(1), real.sequences.dim(2), m.feature_dim, m.feature_seed);

  const Tensor real_feats = fx.extract_batch(real.sequences);
  const TextAligner aligner = TextAligner::fit(real.texts, real_feats, m.aligner_ridge);
  const Tensor text_feats = aligner.map(rows_of(real.texts, rows));
  const Tensor real_sub = rows_of(real_feats, rows);
  const Tensor gen_feats = fx.extract_batch(generated);

  MetricValues v;
  v.samples = rows.size();
  v.fid = fid(gen_feats, real_feats);
  v.r_precision = r_precision(gen_feats, text_feats, m.pool_size, derive_seed(m.metric_seed, "rprec"));
  v.mm_dist = mm_dist(gen_feats, text_feats);
  v.diversity = diversity(gen_feats, m.diversity_subset, derive_seed(m.metric_seed, "div"));
  if (!mm_groups.empty()) {
    std::vector<Tensor> gf;
    for (const auto& g : mm_groups) gf.push_back(fx.extract_batch(g));
    v.mmodality = mmodality(gf, m.mm_pairs, derive_seed(m.metric_seed, "mmod"));
  }
  v.real_r_precision = r_precision(real_sub, text_feats, m.pool_size, derive_seed(m.metric_seed, "rprec"));
  v.real_mm_dist = mm_dist(real_sub, text_feats);
  v.real_diversity = diversity(real_sub, m.diversity_subset, derive_seed(m.metric_seed, "div"));
  v.diversity_gap = std::abs(v.diversity - v.real_diversity);
  return v;
}

MetricValues evaluate_model(const EvalContext& ctx, const Denoiser& model, const DiffusionSchedule& schedule,
                            const SamplerConfig& sampler) {
  const auto rows = eval_rows(ctx);
  const std::size_t need = required_samples(ctx.metrics);
  FTM_REQUIRE(rows.size() >= need, "evaluation needs at least " + std::to_string(need) + " samples, have " +
                                       std::to_string(rows.size()));
  std::vector<std::string> texts;
  for (std::size_t r : rows) texts.push_back(ctx.reference->samples[r].text);
  const Tensor gen = generate(model, schedule, sampler, texts);

  // MModality: the first mm_groups conditioning texts, several seeds each.
  std::vector<Tensor> groups;
  const std::size_t k = ctx.metrics.mm_samples_per_group;
  if (ctx.metrics.mm_groups > 0) {
    SamplerConfig mm = sampler;
    mm.seed = derive_seed(sampler.seed, "mmodality");
    std::vector<std::string> rep;
    for (std::size_t g = 0; g < ctx.metrics.mm_groups; ++g)
      for (std::size_t j = 0; j < k; ++j) rep.push_back(texts[g]);
    const Tensor all = generate(model, schedule, mm, rep);
    for (std::size_t g = 0; g < ctx.metrics.mm_groups; ++g) {
      std::vector<std::size_t> idx(k);
      for (std::size_t j = 0; j < k; ++j) idx[j] = g * k + j;
      groups.push_back(rows_of(all, idx));
    }
  }
  return compute_metrics(ctx, gen, groups);
}

}  // namespace ftm
