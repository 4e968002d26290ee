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

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "ftmssm/tensor.hpp"

namespace ftm {

// Mixes a root seed with a stream label into an independent child seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// Seeded generator whose outputs are identical on every platform: only the
// raw mt19937_64 stream (fully specified by the standard) is used, the
// distributions are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                 // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();                  // standard normal (Box-Muller)
  std::size_t uniform_index(std::size_t n);  // [0, n)

  Tensor normal_tensor(const Shape& shape, double stddev = 1.0);
  Tensor uniform_tensor(const Shape& shape, double lo, double hi);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ftm
