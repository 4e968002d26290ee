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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "ftmssm/kernels.hpp"

namespace ftm::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
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
  const __m256d vx = _mm256_set1_pd(x);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vh = _mm256_mul_pd(_mm256_loadu_pd(abar + i), _mm256_loadu_pd(h + i));
    vh = _mm256_fmadd_pd(_mm256_loadu_pd(bbar + i), vx, vh);
    _mm256_storeu_pd(h + i, vh);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), vh, acc);
  }
  double y = hsum(acc);
  for (; i < n; ++i) {
    h[i] = abar[i] * h[i] + bbar[i] * x;
    y += c[i] * h[i];
  }
  return y;
}

double scan_adjoint_step(double* carry, double* dh, double* dabar, double* dbbar, const double* abar,
                         const double* bbar, const double* c, const double* h_prev, double x, double dy,
                         std::size_t n) {
  const __m256d vdy = _mm256_set1_pd(dy);
  const __m256d vx = _mm256_set1_pd(x);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_fmadd_pd(vdy, _mm256_loadu_pd(c + i), _mm256_loadu_pd(carry + i));
    _mm256_storeu_pd(dh + i, g);
    _mm256_storeu_pd(dabar + i, _mm256_mul_pd(g, _mm256_loadu_pd(h_prev + i)));
    _mm256_storeu_pd(dbbar + i, _mm256_mul_pd(g, vx));
    _mm256_storeu_pd(carry + i, _mm256_mul_pd(g, _mm256_loadu_pd(abar + i)));
    acc = _mm256_fmadd_pd(g, _mm256_loadu_pd(bbar + i), acc);
  }
  double dx = hsum(acc);
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

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::kAvx2, dot_entry, axpy_entry, gemm_nn, gemm_nt, gemm_tn, scan_step,
                             scan_adjoint_step};
  return t;
}

}  // namespace ftm::kernels::detail
