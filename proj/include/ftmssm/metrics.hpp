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

// Evaluation metrics over feature matrices (samples x F): Frechet distance,
// pool-based R-precision, multimodal distance, diversity and multimodality.

#include <array>
#include <cstdint>
#include <vector>

#include "ftmssm/tensor.hpp"

namespace ftm {

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with
// moment (1/n) covariances. When either covariance has an eigenvalue below
// 1e-10, 1e-6 I is added to both. Clamped at zero.
double fid(const Tensor& a, const Tensor& b);

struct RPrecision {
  double top1 = 0.0;
  double top2 = 0.0;
  double top3 = 0.0;
};

// For each row i, ranks d(motion_i, text_i) among P - 1 seeded distinct
// mismatched candidates d(motion_i, text_j); rank = 1 + number of candidates
// strictly closer. Reports the fraction of rows ranked within k.
RPrecision r_precision(const Tensor& motion, const Tensor& text, std::size_t pool, std::uint64_t seed);

// Mean Euclidean distance between paired rows.
double mm_dist(const Tensor& motion, const Tensor& text);

// Two disjoint seeded subsets of size S; mean distance between matched rows.
double diversity(const Tensor& feats, std::size_t subset, std::uint64_t seed);

// Per group, mean distance over `pairs_per_group` seeded pairs of distinct
// members; averaged over groups.
double mmodality(const std::vector<Tensor>& groups, std::size_t pairs_per_group, std::uint64_t seed);

// Linear map from text embeddings into the motion feature space, fitted by
// ridge least squares (with intercept) on paired reference data.
class TextAligner {
 public:
  TextAligner() = default;
  static TextAligner fit(const Tensor& texts, const Tensor& features, double ridge = 1e-3);

  Tensor map(const Tensor& texts) const;  // (n, E) -> (n, F)

  const Tensor& weights() const { return weights_; }  // (E + 1, F), last row is the intercept

 private:
  Tensor weights_;
};

}  // namespace ftm
