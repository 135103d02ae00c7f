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

#include "hwqos/kernels.hpp"

#include <cassert>

namespace hwqos::kernels::scalar {

std::size_t count_at_least(std::span<const double> x, double threshold) noexcept {
  std::size_t n = 0;
  for (double v : x) n += (v >= threshold) ? 1u : 0u;
  return n;
}

std::size_t count_greater(std::span<const double> x, double threshold) noexcept {
  std::size_t n = 0;
  for (double v : x) n += (v > threshold) ? 1u : 0u;
  return n;
}

MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept {
  MomentSums m;
  m.count = x.size();
  for (double v : x) {
    const double d = v - shift;
    m.sum += d;
    m.sum_sq += d * d;
  }
  return m;
}

void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept {
  assert(acc.size() == x.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double p = w * x[i];
    acc[i] += p;
  }
}

void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                           std::span<const double> before) noexcept {
  assert(acc.size() == now.size() && acc.size() == before.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double d = now[i] - before[i];
    const double p = w * d;
    acc[i] += p;
  }
}

}  // namespace hwqos::kernels::scalar
