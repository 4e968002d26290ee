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

// ftmssm: corpus generation, training, sampling, evaluation, gradient audit
// and reporting.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftmssm/checkpoint.hpp"
#include "ftmssm/config.hpp"
#include "ftmssm/error.hpp"
#include "ftmssm/evaluation.hpp"
#include "ftmssm/gradcheck_suite.hpp"
#include "ftmssm/kernels.hpp"
#include "ftmssm/report.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ftm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

// Options every subcommand shares: --config, --seed and one flag per config key.
struct CommonOptions {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_file, "key = value configuration file");
    sub->add_option("--seed", seed, "root seed");
    for (const auto& k : RunConfig::keys()) {
      if (k.name == "seed") continue;
      sub->add_option_function<std::string>(
             "--" + k.name, [this, name = k.name](const std::string& v) { overrides[name] = v; },
             k.help.empty() ? "(default " + k.default_value + ")" : k.help + " (default " + k.default_value + ")")
          ->group("Configuration");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    if (seed) cfg.set("seed", std::to_string(*seed));
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();
    return cfg;
  }
};

void ensure_parent(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  if (!p.empty()) {
    std::error_code ec;
    fs::create_directories(p, ec);
  }
}

Denoiser model_from(const Checkpoint& ck) { return Denoiser(ck.model, ck.params); }

int cmd_gen_data(const RunConfig& cfg, const std::string& out) {
  const Corpus corpus = generate_corpus(cfg.corpus(), cfg.seed());
  ensure_parent(out);
  write_corpus(out, corpus);
  std::cout << "wrote " << corpus.samples.size() << " samples to " << out << " (hash " << file_hash(out) << ")\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::string& corpus_path, const std::string& out_dir,
              const std::string& resume) {
  const Corpus corpus = read_corpus(corpus_path);
  std::optional<Denoiser> model;
  std::optional<AdamW> opt;
  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    FTM_REQUIRE(ck.root_seed == cfg.seed(), "resume: checkpoint was trained with seed " +
                                                std::to_string(ck.root_seed) + ", this run uses " +
                                                std::to_string(cfg.seed()));
    FTM_REQUIRE(ck.optimizer.has_value(), "resume: checkpoint has no optimizer state");
    model.emplace(model_from(ck));
    opt.emplace(cfg.optimizer(), std::move(*ck.optimizer));
  } else {
    model.emplace(Denoiser::create(cfg.model(), cfg.init_seed()));
    opt.emplace(cfg.optimizer(), model->params());
  }
  const TrainingData data = to_training_data(corpus, model->config().text_dim);
  const std::size_t first = opt->state().steps;
  const auto t0 = std::chrono::steady_clock::now();
  const auto losses = train(data, *model, *opt, cfg.schedule(), cfg.train(), [&](std::size_t step, double loss) {
    if ((step + 1) % 100 == 0) {
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "step %zu loss %.4f (%.1fs)\n", step + 1, loss, sec);
    }
  });
  fs::create_directories(out_dir);
  Checkpoint ck{model->config(), model->params(), opt->state(), cfg.seed(), cfg.echo()};
  save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), ck);
  write_text_file((fs::path(out_dir) / "loss_trace.csv").string(), loss_trace_csv(first, losses));
  write_text_file((fs::path(out_dir) / "config.txt").string(), cfg.echo());
  std::cout << "trained steps " << first << ".." << opt->state().steps << "; checkpoint in " << out_dir << "\n";
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, const std::string& ckpt_path, const std::string& text, const std::string& cls,
               std::size_t count, const std::string& out, const std::string& svg_dir) {
  FTM_REQUIRE(text.empty() != cls.empty(), "sample: give exactly one of --text or --class");
  FTM_REQUIRE(count >= 1, "sample: --count must be >= 1");
  if (!cls.empty()) FTM_REQUIRE(is_family(cls), "sample: unknown class '" + cls + "'");
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Denoiser model = model_from(ck);
  const std::string prompt = cls.empty() ? text : template_for(cls, derive_seed(cfg.seed(), "template"));
  SampleSet s;
  s.texts.assign(count, prompt);
  s.classes.assign(count, cls);
  s.sequences = generate(model, cfg.schedule(), cfg.sampler(), s.texts);
  ensure_parent(out);
  write_text_file(out, samples_to_jsonl(s, cfg.echo()));
  if (!svg_dir.empty()) {
    fs::create_directories(svg_dir);
    const std::size_t row = model.config().latent_length * model.config().latent_dim;
    for (std::size_t i = 0; i < count; ++i) {
      Tensor seq({model.config().latent_length, model.config().latent_dim},
                 std::vector<double>(s.sequences.ptr() + i * row, s.sequences.ptr() + (i + 1) * row));
      write_text_file((fs::path(svg_dir) / ("sample_" + std::to_string(i) + ".svg")).string(),
                      sequence_svg(seq, 6, prompt));
    }
  }
  std::cout << "wrote " << count << " samples for \"" << prompt << "\" to " << out << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path, const std::string& generated,
             const std::string& corpus_path, const std::string& out_prefix) {
  FTM_REQUIRE(ckpt_path.empty() != generated.empty(), "eval: give exactly one of --checkpoint or --generated");
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = read_corpus(corpus_path);
  EvalContext ctx{&corpus, cfg.metrics(), cfg.get_size("text_dim")};
  ReportMeta meta{cfg.echo(), file_hash(corpus_path), {}};
  MetricValues v;
  if (!ckpt_path.empty()) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const Denoiser model = model_from(ck);
    ctx.text_dim = model.config().text_dim;
    meta.checkpoint_hash = file_hash(ckpt_path);
    v = evaluate_model(ctx, model, cfg.schedule(), cfg.sampler());
  } else {
    // A pre-generated set, aligned with the evaluation rows of the corpus.
    const SampleSet s = read_sample_set(generated);
    const auto rows = eval_rows(ctx);
    FTM_REQUIRE(s.texts.size() >= rows.size(), "eval: --generated needs at least " + std::to_string(rows.size()) +
                                                   " records, has " + std::to_string(s.texts.size()));
    const std::size_t row = s.sequences.size() / s.sequences.dim(0);
    Tensor gen({rows.size(), s.sequences.dim(1), s.sequences.dim(2)});
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy_n(s.sequences.ptr() + rows[i] * row, row, gen.ptr() + i * row);
    meta.checkpoint_hash = "";
    v = compute_metrics(ctx, gen, {});
  }
  ensure_parent(out_prefix + ".json");
  write_text_file(out_prefix + ".json", metrics_json(v, ctx.metrics, meta));
  write_text_file(out_prefix + ".csv", metrics_csv(v, ctx.metrics, meta));
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Wall-clock lives in a sidecar so the reports themselves stay reproducible.
  write_text_file(out_prefix + ".timing.txt", "wall_clock_seconds = " + std::to_string(sec) + "\n");
  std::printf("FID %.6f  R-Precision %.3f/%.3f/%.3f  MM-Dist %.4f  Diversity %.4f  MModality %.4f  (%.1fs)\n", v.fid,
              v.r_precision.top1, v.r_precision.top2, v.r_precision.top3, v.mm_dist, v.diversity, v.mmodality, sec);
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, bool negative_control, const std::string& out) {
  GradcheckOptions opts;
  opts.negative_control = negative_control;
  const auto checks = run_gradcheck_suite(cfg.seed(), opts);
  bool ok = true;
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    const auto& r = c.report;
    ok = ok && r.passed;
    std::printf("%-20s %-4s scalars=%-6zu max_rel=%.3e max_abs=%.3e worst=%s (%.2fs)\n", c.block.c_str(),
                r.passed ? "PASS" : "FAIL", c.scalars, r.worst_relative_error, r.worst_absolute_error,
                r.worst_param.c_str(), c.seconds);
    if (!r.passed) {
      for (const auto& p : r.params) {
        if (!p.passed) {
          std::printf("    %s[%zu]: analytic %.10e numeric %.10e (%s error %.3e)\n", p.name.c_str(), p.worst_index,
                      p.analytic, p.numeric, p.relative ? "relative" : "absolute", p.max_error);
        }
      }
    }
    blocks.push_back({{"block", c.block},
                      {"passed", r.passed},
                      {"scalars", c.scalars},
                      {"max_relative_error", r.worst_relative_error},
                      {"max_absolute_error", r.worst_absolute_error},
                      {"worst_param", r.worst_param}});
  }
  if (!out.empty()) {
    ensure_parent(out);
    nlohmann::ordered_json j{{"format", "ftmssm-gradcheck"},
                             {"rel_tol", opts.rel_tol},
                             {"abs_tol", opts.abs_tol},
                             {"epsilon", opts.epsilon},
                             {"passed", ok},
                             {"blocks", blocks}};
    write_text_file(out, j.dump(2) + "\n");
  }
  return ok ? kExitOk : kExitNumeric;
}

int cmd_report(const std::vector<std::string>& metrics, const std::string& trace, const std::string& out_dir) {
  FTM_REQUIRE(!metrics.empty() || !trace.empty(), "report: give --metrics and/or --trace");
  fs::create_directories(out_dir);
  std::string md = "# ftmssm report\n\n";
  if (!metrics.empty()) {
    std::vector<std::pair<std::string, MetricValues>> rows;
    for (const auto& m : metrics) {
      const auto eq = m.find('=');
      const std::string label = eq == std::string::npos ? fs::path(m).stem().string() : m.substr(0, eq);
      const std::string path = eq == std::string::npos ? m : m.substr(eq + 1);
      rows.emplace_back(label, metrics_from_json(read_text_file(path)));
    }
    md += markdown_table(rows) + "\n";
  }
  if (!trace.empty()) {
    const auto t = parse_loss_trace(read_text_file(trace));
    FTM_REQUIRE(!t.empty(), "report: loss trace is empty");
    write_text_file((fs::path(out_dir) / "loss.svg").string(), loss_svg(t));
    md += "![training loss](loss.svg)\n";
  }
  write_text_file((fs::path(out_dir) / "report.md").string(), md);
  std::cout << "wrote " << (fs::path(out_dir) / "report.md").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ftmssm: frequency- and text-aware state space diffusion on synthetic motion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ftmssm 1.0");

  CommonOptions common;
  std::string out;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  common.attach(gen);
  gen->add_option("--out", out, "corpus file (JSON Lines)")->required();

  std::string corpus, resume;
  auto* tr = app.add_subcommand("train", "train the denoiser");
  common.attach(tr);
  tr->add_option("--corpus", corpus, "training corpus")->required();
  tr->add_option("--out", out, "output directory")->required();
  tr->add_option("--resume", resume, "checkpoint to resume from");

  std::string ckpt, text, cls, svg;
  std::size_t count = 1;
  auto* sm = app.add_subcommand("sample", "generate motions from a checkpoint");
  common.attach(sm);
  sm->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  sm->add_option("--text", text, "conditioning sentence");
  sm->add_option("--class", cls, "conditioning family (static, walk, stumble, transition)");
  sm->add_option("--count", count, "number of samples");
  sm->add_option("--out", out, "samples file (JSON Lines)")->required();
  sm->add_option("--svg", svg, "directory for per-sample SVG plots");

  std::string generated;
  auto* ev = app.add_subcommand("eval", "compute metrics against a reference corpus");
  common.attach(ev);
  ev->add_option("--checkpoint", ckpt, "checkpoint to sample from");
  ev->add_option("--generated", generated, "pre-generated samples or corpus file");
  ev->add_option("--corpus", corpus, "reference corpus")->required();
  ev->add_option("--out", out, "output prefix (.json, .csv)")->required();

  bool negative = false;
  auto* gc = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  common.attach(gc);
  gc->add_flag("--negative-control", negative, "include a fixture with a deliberately wrong adjoint");
  gc->add_option("--out", out, "JSON report");

  std::vector<std::string> metrics;
  std::string trace;
  auto* rp = app.add_subcommand("report", "Markdown table and SVG plots from run artifacts");
  common.attach(rp);
  rp->add_option("--metrics", metrics, "metrics JSON, optionally label=path");
  rp->add_option("--trace", trace, "loss_trace.csv");
  rp->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = common.resolve();
    if (*gen) return cmd_gen_data(cfg, out);
    if (*tr) return cmd_train(cfg, corpus, out, resume);
    if (*sm) return cmd_sample(cfg, ckpt, text, cls, count, out, svg);
    if (*ev) return cmd_eval(cfg, ckpt, generated, corpus, out);
    if (*gc) return cmd_gradcheck(cfg, negative, out);
    if (*rp) return cmd_report(metrics, trace, out);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
