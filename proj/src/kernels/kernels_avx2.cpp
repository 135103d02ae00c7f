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

#if HWQOS_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <bit>
#include <cassert>

// Compiled with target attributes so the rest of the library stays baseline
// x86-64. Element-wise kernels use separate multiply and add (no FMA) to stay
// bit-identical with the scalar reference.
#define HWQOS_AVX2 __attribute__((target("avx2")))

namespace hwqos::kernels::avx2 {

namespace {

template <int Predicate>
HWQOS_AVX2 std::size_t count_cmp(std::span<const double> x, double threshold) noexcept {
  const double* p = x.data();
  const std::size_t n = x.size();
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const int m0 = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i), t, Predicate));
    const int m1 = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i + 4), t, Predicate));
    const int m2 = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i + 8), t, Predicate));
    const int m3 = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i + 12), t, Predicate));
    const unsigned bits = static_cast<unsigned>(m0) | (static_cast<unsigned>(m1) << 4) |
                          (static_cast<unsigned>(m2) << 8) | (static_cast<unsigned>(m3) << 12);
    count += static_cast<std::size_t>(std::popcount(bits));
  }
  for (; i + 4 <= n; i += 4) {
    const int m = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i), t, Predicate));
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(m)));
  }
  for (; i < n; ++i) {
    if constexpr (Predicate == _CMP_GE_OQ) {
      count += (p[i] >= threshold) ? 1u : 0u;
    } else {
      count += (p[i] > threshold) ? 1u : 0u;
    }
  }
  return count;
}

HWQOS_AVX2 double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  const __m128d sh = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

}  // namespace

std::size_t count_at_least(std::span<const double> x, double threshold) noexcept {
  return count_cmp<_CMP_GE_OQ>(x, threshold);
}

std::size_t count_greater(std::span<const double> x, double threshold) noexcept {
  return count_cmp<_CMP_GT_OQ>(x, threshold);
}

HWQOS_AVX2 MomentSums shifted_moment_sums(std::span<const double> x, double shift) noexcept {
  const double* p = x.data();
  const std::size_t n = x.size();
  const __m256d s = _mm256_set1_pd(shift);
  __m256d sum0 = _mm256_setzero_pd();
  __m256d sum1 = _mm256_setzero_pd();
  __m256d sq0 = _mm256_setzero_pd();
  __m256d sq1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(p + i), s);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(p + i + 4), s);
    sum0 = _mm256_add_pd(sum0, d0);
    sum1 = _mm256_add_pd(sum1, d1);
    sq0 = _mm256_add_pd(sq0, _mm256_mul_pd(d0, d0));
    sq1 = _mm256_add_pd(sq1, _mm256_mul_pd(d1, d1));
  }
  MomentSums m;
  m.count = n;
  m.sum = hsum(_mm256_add_pd(sum0, sum1));
  m.sum_sq = hsum(_mm256_add_pd(sq0, sq1));
  for (; i < n; ++i) {
    const double d = p[i] - shift;
    m.sum += d;
    m.sum_sq += d * d;
  }
  return m;
}

HWQOS_AVX2 void scaled_add(std::span<double> acc, double w, std::span<const double> x) noexcept {
  assert(acc.size() == x.size());
  double* a = acc.data();
  const double* p = x.data();
  const std::size_t n = acc.size();
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(vw, _mm256_loadu_pd(p + i));
    _mm256_storeu_pd(a + i, _mm256_add_pd(_mm256_loadu_pd(a + i), prod));
  }
  for (; i < n; ++i) {
    const double prod = w * p[i];
    a[i] += prod;
  }
}

HWQOS_AVX2 void scaled_difference_add(std::span<double> acc, double w, std::span<const double> now,
                                      std::span<const double> before) noexcept {
  assert(acc.size() == now.size() && acc.size() == before.size());
  double* a = acc.data();
  const double* q = now.data();
  const double* b = before.data();
  const std::size_t n = acc.size();
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(q + i), _mm256_loadu_pd(b + i));
    const __m256d prod = _mm256_mul_pd(vw, d);
    _mm256_storeu_pd(a + i, _mm256_add_pd(_mm256_loadu_pd(a + i), prod));
  }
  for (; i < n; ++i) {
    const double d = q[i] - b[i];
    const double prod = w * d;
    a[i] += prod;
  }
}

}  // namespace hwqos::kernels::avx2

#endif  // HWQOS_HAVE_AVX2_KERNELS
