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

#include "ftmssm/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ftmssm/error.hpp"
#include "ftmssm/rng.hpp"
#include "json.hpp"

namespace ftm {
namespace {

using nlohmann::ordered_json;

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
  double w = 640, h = 320, pad = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  double x(double v) const { return pad + (v - xmin) / (xmax - xmin) * (w - 2 * pad); }
  double y(double v) const { return h - pad - (v - ymin) / (ymax - ymin) * (h - 2 * pad); }
};

std::string svg_open(const Frame& f, const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.w << "\" height=\"" << f.h << "\" viewBox=\"0 0 "
     << f.w << ' ' << f.h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << f.pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
  os << "<line x1=\"" << f.pad << "\" y1=\"" << f.h - f.pad << "\" x2=\"" << f.w - f.pad << "\" y2=\"" << f.h - f.pad
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << f.pad << "\" y1=\"" << f.pad << "\" x2=\"" << f.pad << "\" y2=\"" << f.h - f.pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"4\" y=\"" << f.pad + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(f.ymax, 3)
     << "</text>\n";
  os << "<text x=\"4\" y=\"" << f.h - f.pad << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(f.ymin, 3)
     << "</text>\n";
  return os.str();
}

std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts, const char* color) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << (i ? " " : "") << fmt(f.x(pts[i].first), 2) << ',' << fmt(f.y(pts[i].second), 2);
  }
  os << "\"/>\n";
  return os.str();
}

ordered_json rprec_json(const RPrecision& r) { return ordered_json{{"top1", r.top1}, {"top2", r.top2}, {"top3", r.top3}}; }

RPrecision rprec_from(const nlohmann::json& j) {
  return {j.at("top1").get<double>(), j.at("top2").get<double>(), j.at("top3").get<double>()};
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_text_file(path))); }

std::string metrics_json(const MetricValues& v, const MetricConfig& m, const ReportMeta& meta) {
  ordered_json j;
  j["format"] = "ftmssm-metrics";
  j["version"] = 1;
  j["metrics"] = ordered_json{{"samples", v.samples},
                              {"fid", v.fid},
                              {"r_precision", rprec_json(v.r_precision)},
                              {"mm_dist", v.mm_dist},
                              {"diversity", v.diversity},
                              {"mmodality", v.mmodality}};
  j["real"] = ordered_json{{"r_precision", rprec_json(v.real_r_precision)},
                           {"mm_dist", v.real_mm_dist},
                           {"diversity", v.real_diversity},
                           {"diversity_gap", v.diversity_gap}};
  j["metric_config"] = ordered_json{{"feature_dim", m.feature_dim},
                                    {"feature_seed", m.feature_seed},
                                    {"pool_size", m.pool_size},
                                    {"diversity_subset", m.diversity_subset},
                                    {"mm_groups", m.mm_groups},
                                    {"mm_samples_per_group", m.mm_samples_per_group},
                                    {"mm_pairs", m.mm_pairs},
                                    {"eval_samples", m.eval_samples},
                                    {"metric_seed", m.metric_seed},
                                    {"aligner_ridge", m.aligner_ridge}};
  j["corpus_hash"] = meta.corpus_hash;
  j["checkpoint_hash"] = meta.checkpoint_hash;
  j["config"] = meta.config_echo;
  return j.dump(2) + "\n";
}

MetricValues metrics_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "ftmssm-metrics") throw FormatError("not a metrics report");
    const auto& m = j.at("metrics");
    const auto& r = j.at("real");
    MetricValues v;
    v.samples = m.at("samples").get<std::size_t>();
    v.fid = m.at("fid").get<double>();
    v.r_precision = rprec_from(m.at("r_precision"));
    v.mm_dist = m.at("mm_dist").get<double>();
    v.diversity = m.at("diversity").get<double>();
    v.mmodality = m.at("mmodality").get<double>();
    v.real_r_precision = rprec_from(r.at("r_precision"));
    v.real_mm_dist = r.at("mm_dist").get<double>();
    v.real_diversity = r.at("diversity").get<double>();
    v.diversity_gap = r.at("diversity_gap").get<double>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
}

std::string metrics_csv(const MetricValues& v, const MetricConfig& m, const ReportMeta& meta) {
  std::ostringstream os;
  os.precision(17);
  os << "metric,value\n";
  os << "samples," << v.samples << '\n';
  os << "fid," << v.fid << '\n';
  os << "r_precision_top1," << v.r_precision.top1 << '\n';
  os << "r_precision_top2," << v.r_precision.top2 << '\n';
  os << "r_precision_top3," << v.r_precision.top3 << '\n';
  os << "mm_dist," << v.mm_dist << '\n';
  os << "diversity," << v.diversity << '\n';
  os << "mmodality," << v.mmodality << '\n';
  os << "real_r_precision_top1," << v.real_r_precision.top1 << '\n';
  os << "real_r_precision_top2," << v.real_r_precision.top2 << '\n';
  os << "real_r_precision_top3," << v.real_r_precision.top3 << '\n';
  os << "real_mm_dist," << v.real_mm_dist << '\n';
  os << "real_diversity," << v.real_diversity << '\n';
  os << "diversity_gap," << v.diversity_gap << '\n';
  os << "pool_size," << m.pool_size << '\n';
  os << "diversity_subset," << m.diversity_subset << '\n';
  os << "metric_seed," << m.metric_seed << '\n';
  os << "feature_seed," << m.feature_seed << '\n';
  os << "corpus_hash," << meta.corpus_hash << '\n';
  os << "checkpoint_hash," << meta.checkpoint_hash << '\n';
  return os.str();
}

std::string markdown_table(const std::vector<std::pair<std::string, MetricValues>>& rows) {
  std::ostringstream os;
  os << "| Method | FID | Top-1 | Top-2 | Top-3 | MM-Dist | Diversity | MModality |\n";
  os << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  bool real_done = false;
  for (const auto& [label, v] : rows) {
    if (!real_done) {
      os << "| Real (reference) | - | " << fmt(v.real_r_precision.top1, 3) << " | " << fmt(v.real_r_precision.top2, 3)
         << " | " << fmt(v.real_r_precision.top3, 3) << " | " << fmt(v.real_mm_dist, 3) << " | "
         << fmt(v.real_diversity, 3) << " | - |\n";
      real_done = true;
    }
    os << "| " << label << " | " << fmt(v.fid, 4) << " | " << fmt(v.r_precision.top1, 3) << " | "
       << fmt(v.r_precision.top2, 3) << " | " << fmt(v.r_precision.top3, 3) << " | " << fmt(v.mm_dist, 3) << " | "
       << fmt(v.diversity, 3) << " | " << fmt(v.mmodality, 3) << " |\n";
  }
  return os.str();
}

std::string loss_trace_csv(std::size_t first_step, const std::vector<double>& losses) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) os << first_step + i << ',' << losses[i] << '\n';
  return os.str();
}

std::vector<std::pair<std::size_t, double>> parse_loss_trace(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.rfind("step", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("loss trace line " + std::to_string(lineno) + ": no comma");
    try {
      out.emplace_back(std::stoull(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw FormatError("loss trace line " + std::to_string(lineno) + ": not a number");
    }
  }
  return out;
}

std::string loss_svg(const std::vector<std::pair<std::size_t, double>>& trace) {
  FTM_REQUIRE(!trace.empty(), "loss_svg: empty trace");
  Frame f;
  f.xmin = static_cast<double>(trace.front().first);
  f.xmax = std::max(f.xmin + 1.0, static_cast<double>(trace.back().first));
  f.ymin = 0.0;
  f.ymax = 0.0;
  for (const auto& p : trace) f.ymax = std::max(f.ymax, p.second);
  if (f.ymax <= 0.0) f.ymax = 1.0;
  std::vector<std::pair<double, double>> raw, smooth;
  // 50-step moving average for readability.
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    raw.emplace_back(static_cast<double>(trace[i].first), trace[i].second);
    acc += trace[i].second;
    if (i >= 50) acc -= trace[i - 50].second;
    smooth.emplace_back(static_cast<double>(trace[i].first), acc / static_cast<double>(std::min<std::size_t>(i + 1, 50)));
  }
  return svg_open(f, "training loss (raw and 50-step mean)") + polyline(f, raw, "#c0c0c0") +
         polyline(f, smooth, kPalette[0]) + "</svg>\n";
}

std::string sequence_svg(const Tensor& sequence, std::size_t max_channels, const std::string& title) {
  FTM_REQUIRE(sequence.rank() == 2 && sequence.dim(0) >= 2, "sequence_svg: need an (L >= 2, C) sequence");
  const std::size_t len = sequence.dim(0), c = sequence.dim(1);
  const std::size_t shown = std::min(max_channels, c);
  Frame f;
  f.xmax = static_cast<double>(len - 1);
  f.ymin = f.ymax = sequence[0];
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t j = 0; j < shown; ++j) {
      f.ymin = std::min(f.ymin, sequence[t * c + j]);
      f.ymax = std::max(f.ymax, sequence[t * c + j]);
    }
  if (f.ymax - f.ymin < 1e-9) {
    f.ymin -= 1.0;
    f.ymax += 1.0;
  }
  std::string out = svg_open(f, title);
  for (std::size_t j = 0; j < shown; ++j) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t t = 0; t < len; ++t) pts.emplace_back(static_cast<double>(t), sequence[t * c + j]);
    out += polyline(f, pts, kPalette[j % std::size(kPalette)]);
  }
  return out + "</svg>\n";
}

}  // namespace ftm
