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

// Inner-loop arithmetic. Every routine has a scalar reference implementation
// and, where the target supports it, an AVX2+FMA (x86-64) or NEON (aarch64)
// variant. The active table is chosen once at startup from CPU features and
// can be overridden with FTMSSM_ISA=scalar|avx2|neon or set_kernel_isa().
//
// SIMD variants reassociate reductions and use fused multiply-add, so they
// agree with the scalar reference to rounding, not bitwise. Results are
// bitwise-stable for a fixed ISA.

#include <cstddef>
#include <string_view>
#include <vector>

namespace ftm::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // Y(MxN) = X(MxK) * W(KxN), or += when accumulate.
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* x, const double* w, double* y,
                  bool accumulate);
  // Y(MxK) += G(MxN) * W(KxN)^T
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* g, const double* w, double* y);
  // W(KxN) += X(MxK)^T * G(MxN)
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* x, const double* g, double* w);

  // One recurrent step over n states:
  //   h[i] = abar[i] * h[i] + bbar[i] * x;  returns sum_i c[i] * h[i]
  double (*scan_step)(double* h, const double* abar, const double* bbar, double x, const double* c,
                      std::size_t n);

  // Adjoint of scan_step at one timestep. On entry carry holds the state
  // cotangent flowing back from step t+1 (already multiplied by abar[t+1]).
  //   dh[i]    = dy * c[i] + carry[i]
  //   dabar[i] = dh[i] * h_prev[i]
  //   dbbar[i] = dh[i] * x
  //   carry[i] = dh[i] * abar[i]
  // Writes dh, dabar, dbbar; returns sum_i dh[i] * bbar[i] (the x cotangent).
  double (*scan_adjoint_step)(double* carry, double* dh, double* dabar, double* dbbar, const double* abar,
                              const double* bbar, const double* c, const double* h_prev, double x, double dy,
                              std::size_t n);
};

const KernelTable& active();
const KernelTable& table(Isa isa);  // throws ContractViolation if unsupported
std::vector<Isa> available_isas();
void set_kernel_isa(Isa isa);

namespace detail {
const KernelTable& scalar_table();
#if defined(FTMSSM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(FTMSSM_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace ftm::kernels
