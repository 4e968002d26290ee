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

#include <atomic>
#include <cstdlib>
#include <string>

#include "ftmssm/error.hpp"

namespace ftm::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(FTMSSM_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(FTMSSM_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("FTMSSM_ISA")) {
    const std::string want(env);
    for (Isa isa : available_isas()) {
      if (isa_name(isa) == want) return &table(isa);
    }
  }
  const auto isas = available_isas();
  return &table(isas.back());
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{pick_default()};
  return s;
}

}  // namespace

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table(Isa isa) {
  if (!cpu_supports(isa)) throw ContractViolation("kernel ISA not supported here: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(FTMSSM_HAVE_AVX2)
    case Isa::kAvx2: return detail::avx2_table();
#endif
#if defined(FTMSSM_HAVE_NEON)
    case Isa::kNeon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_kernel_isa(Isa isa) { slot().store(&table(isa)); }

}  // namespace ftm::kernels
