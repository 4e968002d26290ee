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

#include "ftmssm/kernels.hpp"

namespace ftm::kernels::detail {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
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
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = abar[i] * h[i] + bbar[i] * x;
    y += c[i] * h[i];
  }
  return y;
}

double scan_adjoint_step(double* carry, double* dh, double* dabar, double* dbbar, const double* abar,
                         const double* bbar, const double* c, const double* h_prev, double x, double dy,
                         std::size_t n) {
  double dx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = dy * c[i] + carry[i];
    dh[i] = g;
    dabar[i] = g * h_prev[i];
    dbbar[i] = g * x;
    carry[i] = g * abar[i];
    dx += g * bbar[i];
  }
  return dx;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::kScalar, dot, axpy, gemm_nn, gemm_nt, gemm_tn, scan_step, scan_adjoint_step};
  return t;
}

}  // namespace ftm::kernels::detail
