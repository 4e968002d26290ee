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

#include <arm_neon.h>

#include "ftmssm/kernels.hpp"

namespace ftm::kernels::detail {

namespace {

inline double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* x, const double* w, double* y,
             bool accumulate) {
  for (std::size_t r = 0; r < m; ++r) {
    double* yr = y + r * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) yr[j] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) axpy(x[r * k + p], w + p * n, yr, n);
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* g, const double* w, double* y) {
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t p = 0; p < k; ++p) y[r * k + p] += dot(g + r * n, w + p * n, n);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* x, const double* g, double* w) {
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t p = 0; p < k; ++p) axpy(x[r * k + p], g + r * n, w + p * n, n);
  }
}

double scan_step(double* h, const double* abar, const double* bbar, double x, const double* c, std::size_t n) {
  const float64x2_t vx = vdupq_n_f64(x);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vh = vmulq_f64(vld1q_f64(abar + i), vld1q_f64(h + i));
    vh = vfmaq_f64(vh, vld1q_f64(bbar + i), vx);
    vst1q_f64(h + i, vh);
    acc = vfmaq_f64(acc, vld1q_f64(c + i), vh);
  }
  double y = vaddvq_f64(acc);
  for (; i < n; ++i) {
    h[i] = abar[i] * h[i] + bbar[i] * x;
    y += c[i] * h[i];
  }
  return y;
}

double scan_adjoint_step(double* carry, double* dh, double* dabar, double* dbbar, const double* abar,
                         const double* bbar, const double* c, const double* h_prev, double x, double dy,
                         std::size_t n) {
  const float64x2_t vdy = vdupq_n_f64(dy);
  const float64x2_t vx = vdupq_n_f64(x);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vfmaq_f64(vld1q_f64(carry + i), vdy, vld1q_f64(c + i));
    vst1q_f64(dh + i, g);
    vst1q_f64(dabar + i, vmulq_f64(g, vld1q_f64(h_prev + i)));
    vst1q_f64(dbbar + i, vmulq_f64(g, vx));
    vst1q_f64(carry + i, vmulq_f64(g, vld1q_f64(abar + i)));
    acc = vfmaq_f64(acc, g, vld1q_f64(bbar + i));
  }
  double dx = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double g = dy * c[i] + carry[i];
    dh[i] = g;
    dabar[i] = g * h_prev[i];
    dbbar[i] = g * x;
    carry[i] = g * abar[i];
    dx += g * bbar[i];
  }
  return dx;
}

double dot_entry(const double* a, const double* b, std::size_t n) { return dot(a, b, n); }
void axpy_entry(double alpha, const double* x, double* y, std::size_t n) { axpy(alpha, x, y, n); }

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{Isa::kNeon, dot_entry, axpy_entry, gemm_nn, gemm_nt, gemm_tn, scan_step,
                             scan_adjoint_step};
  return t;
}

}  // namespace ftm::kernels::detail
