// Copyright 2026 The hwqos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "hwqos/kernels.hpp"

namespace hwqos::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if HWQOS_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("HWQOS_ISA"); env != nullptr && std::string_view(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) noexcept {
  if (!isa_supported(isa)) isa = Isa::scalar;
  return current().exchange(isa, std::memory_order_relaxed);
}

#if HWQOS_HAVE_AVX2_KERNELS
#define HWQOS_DISPATCH(fn, ...)                                          \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define HWQOS_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

std::size_t count_at_least(std::span<const double> x, double threshold) noexcept {
  return HWQOS_DISPATCH(count_at_least, x, threshold);
}

std::size_t count_greater(std::span<const double> x, double threshold) noexcept {
  return HWQOS_DISPATCH(count_greater, x, threshold);
}

MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept {
  return HWQOS_DISPATCH(shifted_moment_sums, x, shift);
}

void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept {
  HWQOS_DISPATCH(scaled_add, acc, w, x);
}

void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                           std::span<const double> before) noexcept {
  HWQOS_DISPATCH(scaled_difference_add, acc, w, now, before);
}

#undef HWQOS_DISPATCH

}  // namespace hwqos::kernels
