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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hwqos/errors.hpp"
#include "hwqos/hw_solver.hpp"

using namespace hwqos;

namespace {

// Phi(x) = 1/2 + integral_0^x phi, composite Simpson with 20000 panels.
double simpson_cdf(double x) {
  const int panels = 20000;
  const double h = x / panels;
  auto f = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  double s = f(0.0) + f(x);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 0.5 + s * h / 3.0;
}

// Direct transcription of the delay function; fine for psi below ~25.
long double naive_alpha(long double psi) {
  const long double phi = 0.5L * std::erfc(-psi / std::sqrt(2.0L));
  return 1.0L / (1.0L + std::sqrt(2.0L * std::numbers::pi_v<long double>) * psi * phi * std::exp(psi * psi / 2.0L));
}

// Plain bisection on the naive forward map, 200 halvings.
double naive_psi(double alpha) {
  long double lo = 0.0L;
  long double hi = 25.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (naive_alpha(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

}  // namespace

TEST_CASE("normal cdf against numerical integration") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    CAPTURE(x);
    CHECK(std::abs(normal_cdf(x) - simpson_cdf(x)) <= 1e-12);
    CHECK(std::abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-15);
  }
  double prev = 0.0;
  for (double x = -40.0; x <= 40.0; x += 0.01) {
    const double p = normal_cdf(x);
    CHECK(p >= prev);
    prev = p;
  }
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.02425, 0.3, 0.5, 0.77, 0.975, 0.999999}) {
    CAPTURE(p);
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
    CHECK(normal_quantile_fast(p) == doctest::Approx(x).epsilon(1e-8));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("delay probability forward values") {
  CHECK(hw_delay_probability(0.0) == 1.0);
  CHECK(hw_delay_probability(1.0) == doctest::Approx(0.22336127479826).epsilon(1e-12));
  const double tiny = hw_delay_probability(50.0);
  CHECK(tiny >= 0.0);
  CHECK(tiny < 1e-300);
  // alpha(40) is about 1e-350, below the double range; the log odds stay exact.
  CHECK(std::isfinite(hw_delay_probability(40.0)));
  CHECK(hw_log_odds(40.0) == doctest::Approx(800.0 + std::log(40.0) + 0.5 * std::log(2.0 * std::numbers::pi)));
  for (double psi = 0.05; psi < 25.0; psi += 0.45) {
    CHECK(hw_delay_probability(psi) == doctest::Approx(static_cast<double>(naive_alpha(psi))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(hw_delay_probability(-0.1), InvalidArgument);
  CHECK_THROWS_AS(hw_delay_probability(std::nan("")), InvalidArgument);
  CHECK_THROWS_AS(hw_delay_probability(INFINITY), InvalidArgument);
}

TEST_CASE("delay probability is strictly decreasing") {
  double prev = 1.0;
  double prev_odds = -INFINITY;
  for (int i = 1; i <= 4000; ++i) {
    const double psi = i * 0.01;
    const double a = hw_delay_probability(psi);
    // Strict while alpha is a normal double, non-increasing once it underflows.
    if (prev > 1e-300) {
      CHECK(a < prev);
    } else {
      CHECK(a <= prev);
    }
    const double odds = hw_log_odds(psi);
    CHECK(odds > prev_odds);
    prev = a;
    prev_odds = odds;
  }
}

TEST_CASE("psi solver against bisection oracle and reference values") {
  CHECK(hw_solve_psi(1.0).psi == 0.0);
  CHECK(hw_solve_psi(0.22336127479826).psi == doctest::Approx(1.0).epsilon(1e-10));
  // Reference roots computed to 30 digits with arbitrary-precision arithmetic.
  CHECK(hw_solve_psi(0.005).psi == doctest::Approx(2.6144887747929).epsilon(1e-12));
  CHECK(hw_solve_psi(0.005 / 3).psi == doctest::Approx(2.9635931374025).epsilon(1e-12));
  CHECK(hw_solve_psi(0.05).psi == doctest::Approx(1.7398362717905).epsilon(1e-12));
  CHECK(hw_solve_psi(0.5).psi == doctest::Approx(0.50605446898918).epsilon(1e-12));
  for (double alpha : {0.9, 0.5, 0.15, 0.0075, 1e-4, 1e-8}) {
    CAPTURE(alpha);
    const HwSolution s = hw_solve_psi(alpha);
    CHECK(s.psi == doctest::Approx(naive_psi(alpha)).epsilon(1e-11));
    CHECK(s.alpha == alpha);
    CHECK(s.residual <= 1e-10);
  }
}

TEST_CASE("psi solver round trip and monotonicity") {
  double prev = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = std::pow(10.0, -6.0 + 6.0 * i / 999.0);
    const HwSolution s = hw_solve_psi(alpha);
    CHECK(std::abs(hw_delay_probability(s.psi) - alpha) <= 1e-9 * alpha + 1e-12);
    CHECK(s.psi <= prev);
    prev = s.psi;
  }
  CHECK(hw_solve_psi(1e-300).psi > 30.0);
  CHECK(hw_solve_psi(1.0 - 1e-12).psi > 0.0);
}

TEST_CASE("psi solver rejects out-of-range targets") {
  CHECK_THROWS_AS(hw_solve_psi(0.0), InvalidArgument);
  CHECK_THROWS_AS(hw_solve_psi(-0.1), InvalidArgument);
  CHECK_THROWS_AS(hw_solve_psi(1.5), InvalidArgument);
  CHECK_THROWS_AS(hw_solve_psi(1e-310), InvalidArgument);
  CHECK_THROWS_AS(hw_solve_psi(std::nan("")), InvalidArgument);
}
