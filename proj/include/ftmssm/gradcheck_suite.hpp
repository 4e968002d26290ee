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

// Block-level gradient audit: analytic gradients of each model block against
// central finite differences on small seeded fixtures. Block inputs are
// included as parameters so input gradients are audited too.

#include <cstdint>
#include <string>
#include <vector>

#include "ftmssm/autograd.hpp"

namespace ftm {

struct GradcheckOptions {
  double rel_tol = 1e-4;
  double abs_tol = 1e-8;
  double epsilon = 1e-5;
  bool negative_control = false;  // adds a fixture whose adjoint is wrong on purpose
};

struct BlockCheck {
  std::string block;
  CheckReport report;
  std::size_t scalars = 0;
  double seconds = 0.0;
  bool expected_to_fail = false;
};

struct GradcheckFixture {
  std::string block;
  ParameterSet params;
  LossFn loss;
  bool expected_to_fail = false;
};

// cdwconv, freq_ssm, text_ssm, freq_mamba_block, text_mamba_block,
// ftmamba_layer, denoiser_tiny (+ corrupted_adjoint with negative_control).
std::vector<GradcheckFixture> gradcheck_fixtures(std::uint64_t seed, bool negative_control);

std::vector<BlockCheck> run_gradcheck_suite(std::uint64_t seed, const GradcheckOptions& opts);

// True when every ordinary block passed (the negative control is excluded).
bool suite_passed(const std::vector<BlockCheck>& checks);

}  // namespace ftm
