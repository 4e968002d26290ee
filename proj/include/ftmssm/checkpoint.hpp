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

// Binary checkpoint: model configuration, parameters, optimizer state and
// the effective run configuration. All numbers are little-endian; tensors
// are stored as IEEE-754 binary64, so a round trip is bit-exact.
//
//   "FTMSSMCK"  u32 version
//   u64 root_seed  u64 optimizer_steps
//   model config (12 x u64)
//   str config_echo
//   u32 count, then per parameter: str name, u8 frozen, u32 rank, u64 dims[rank], f64 data[numel]
//   u8 has_moments, then per parameter: f64 m[numel], f64 v[numel]
//
// where str is u32 length followed by the bytes.

#include <cstdint>
#include <optional>
#include <string>

#include "ftmssm/autograd.hpp"
#include "ftmssm/denoiser.hpp"
#include "ftmssm/diffusion.hpp"

namespace ftm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DenoiserConfig model;
  ParameterSet params;
  std::optional<AdamWState> optimizer;
  std::uint64_t root_seed = 0;
  std::string config_echo;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws FormatError on a bad magic, an unsupported version, truncation or
// inconsistent sizes.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ftm
