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

#include "ftmssm/wavelet.hpp"

#include <numbers>
#include <string>

#include "ftmssm/error.hpp"

namespace ftm {

FreqBands dwt_haar(const Tensor& x) {
  FTM_REQUIRE(x.rank() == 2, "dwt_haar: expected (L, D), got " + shape_str(x.shape()));
  const std::size_t l = x.dim(0), d = x.dim(1);
  FTM_REQUIRE(l >= 2, "dwt_haar: length must be >= 2, got " + std::to_string(l));
  const std::size_t half = (l + 1) / 2;
  const double s = 1.0 / std::numbers::sqrt2;
  FreqBands out{Tensor({half, d}), Tensor({half, d}), l};
  for (std::size_t k = 0; k < half; ++k) {
    const std::size_t t1 = std::min(2 * k + 1, l - 1);
    for (std::size_t c = 0; c < d; ++c) {
      const double even = x[2 * k * d + c];
      const double odd = x[t1 * d + c];
      out.low[k * d + c] = s * (even + odd);
      out.high[k * d + c] = s * (even - odd);
    }
  }
  return out;
}

Tensor idwt_haar(const FreqBands& bands) {
  FTM_REQUIRE(bands.low.rank() == 2 && bands.low.shape() == bands.high.shape(),
              "idwt_haar: low and high bands must share (frames, D) extents");
  const std::size_t half = bands.low.dim(0), d = bands.low.dim(1);
  const std::size_t l = bands.original_length;
  FTM_REQUIRE(l >= 2 && (l + 1) / 2 == half, "idwt_haar: original length " + std::to_string(l) +
                                                 " inconsistent with " + std::to_string(half) + " frames");
  const double s = 1.0 / std::numbers::sqrt2;
  Tensor x({l, d});
  for (std::size_t t = 0; t < l; ++t) {
    const std::size_t k = t / 2;
    const double sign = (t % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t c = 0; c < d; ++c) x[t * d + c] = s * (bands.low[k * d + c] + sign * bands.high[k * d + c]);
  }
  return x;
}

}  // namespace ftm
