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

#pragma once

// Data-parallel inner loops shared by the Monte Carlo bound search and the
// simulator's output analysis. Every kernel has a scalar reference in
// kernels::scalar and, on x86-64, an AVX2 variant in kernels::avx2. The
// free functions in kernels:: dispatch at runtime to the widest variant the
// CPU supports.
//
// Equivalence contract between variants:
//   - counting and element-wise kernels are bit-identical;
//   - reductions (moment sums) agree to rounding, since lanes change the
//     summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace hwqos::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

/// True when the variant was compiled in and the running CPU supports it.
bool isa_supported(Isa isa) noexcept;

/// Variant used by the dispatching entry points. Defaults to the best
/// supported one; the environment variable HWQOS_ISA=scalar forces the
/// reference path.
Isa active_isa() noexcept;

/// Selects the dispatch target and returns the previous one. Requesting an
/// unsupported variant falls back to scalar.
Isa set_active_isa(Isa isa) noexcept;

/// RAII override of the dispatch target, for tests and benchmarks.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) noexcept : previous_(set_active_isa(isa)) {}
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

/// Sums of (x - shift) and (x - shift)^2. Shifting by a value near the mean
/// keeps the variance computation free of cancellation.
struct MomentSums {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

// Dispatching entry points.
std::size_t count_at_least(std::span<const double> x, double threshold) noexcept;
std::size_t count_greater(std::span<const double> x, double threshold) noexcept;
MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept;
// acc[i] += w * x[i]
void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept;
// acc[i] += w * (now[i] - before[i])
void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                           std::span<const double> before) noexcept;

namespace scalar {
std::size_t count_at_least(std::span<const double> x, double threshold) noexcept;
std::size_t count_greater(std::span<const double> x, double threshold) noexcept;
MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept;
void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept;
void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                           std::span<const double> before) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define HWQOS_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::size_t count_at_least(std::span<const double> x, double threshold) noexcept;
std::size_t count_greater(std::span<const double> x, double threshold) noexcept;
MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept;
void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept;
void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                           std::span<const double> before) noexcept;
}  // namespace avx2
#else
#define HWQOS_HAVE_AVX2_KERNELS 0
#endif

}  // namespace hwqos::kernels
