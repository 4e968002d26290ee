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

// Metric reports (JSON, CSV, Markdown table), loss traces and SVG plots.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ftmssm/config.hpp"
#include "ftmssm/evaluation.hpp"

namespace ftm {

struct ReportMeta {
  std::string config_echo;
  std::string corpus_hash;      // hex FNV-1a of the reference corpus file
  std::string checkpoint_hash;  // hex FNV-1a of the checkpoint file, or empty
};

std::string hex64(std::uint64_t v);
std::string file_hash(const std::string& path);

// Pretty-printed JSON with a trailing newline; parse + re-emit is identical.
std::string metrics_json(const MetricValues& v, const MetricConfig& m, const ReportMeta& meta);
MetricValues metrics_from_json(const std::string& text);
// "metric,value" rows followed by the metric configuration.
std::string metrics_csv(const MetricValues& v, const MetricConfig& m, const ReportMeta& meta);

// Rows in the layout Method | FID | R-Precision Top-1/2/3 | MM-Dist | Diversity | MModality.
std::string markdown_table(const std::vector<std::pair<std::string, MetricValues>>& rows);

// "step,loss" per line after a header.
std::string loss_trace_csv(std::size_t first_step, const std::vector<double>& losses);
std::vector<std::pair<std::size_t, double>> parse_loss_trace(const std::string& text);

// Polyline plots. Deterministic output (fixed number formatting).
std::string loss_svg(const std::vector<std::pair<std::size_t, double>>& trace);
std::string sequence_svg(const Tensor& sequence, std::size_t max_channels, const std::string& title);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ftm
