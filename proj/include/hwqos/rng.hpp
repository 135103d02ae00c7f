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

#include <cmath>
#include <cstdint>
#include <random>

namespace hwqos {

/// A reproducible stream of random numbers identified by (seed, stream id).
///
/// Generator contract: a 64-bit Mersenne Twister whose 312-word state is
/// filled by std::seed_seq from the four 32-bit halves of seed and stream id.
/// seed_seq diffuses every input bit through the whole state, so streams that
/// differ only in their id start from unrelated states; the MT19937-64 period
/// (2^19937 - 1) makes overlap between the short segments any run consumes
/// negligible. Identical (seed, stream id) pairs give identical sequences on
/// every platform, because integer-to-real conversion below is done by hand
/// rather than through std::*_distribution.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Standard normal via the polar Box-Muller method (no cached spare, so
  /// the sequence depends only on the number of calls).
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace hwqos
