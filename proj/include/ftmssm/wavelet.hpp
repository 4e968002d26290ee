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

#include <cstddef>

#include "ftmssm/tensor.hpp"

namespace ftm {

// One-level Haar coefficients of an (L, D) sequence.
struct FreqBands {
  Tensor low;   // (ceil(L/2), D) approximation
  Tensor high;  // (ceil(L/2), D) detail
  std::size_t original_length = 0;
};

// low[k] = (x[2k] + x[2k+1]) / sqrt(2), high[k] = (x[2k] - x[2k+1]) / sqrt(2).
// Odd L is padded on the right by repeating the last frame.
FreqBands dwt_haar(const Tensor& x);

// Exact inverse of dwt_haar; the padding frame is dropped.
Tensor idwt_haar(const FreqBands& bands);

}  // namespace ftm
