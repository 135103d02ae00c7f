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

#include "hwqos/hw_solver.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hwqos/errors.hpp"

namespace hwqos {

namespace {

constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
constexpr double kPsiMax = 50.0;

// Acklam's rational approximation to the normal quantile.
constexpr double kA[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                         1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                         6.680131188771972e+01, -1.328068155288572e+01};
constexpr double kC[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                         -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
constexpr double kD[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                         3.754408661907416e+00};
constexpr double kPLow = 0.02425;

double acklam(double p) noexcept {
  if (p < kPLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
           ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  }
  if (p > 1.0 - kPLow) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
           ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
         (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

// d/dpsi of hw_log_odds.
double log_odds_slope(double psi) noexcept {
  return 1.0 / psi + normal_pdf(psi) / normal_cdf(psi) + psi;
}

}  // namespace

double normal_pdf(double x) noexcept { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile_fast(double p) noexcept {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return acklam(p);
}

double normal_quantile(double p) noexcept {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  double x = acklam(p);
  // One Halley step; the error term is taken from the nearer tail so that
  // p close to 1 does not lose digits.
  const double e = (x <= 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double hw_log_odds(double psi) {
  if (!(psi >= 0.0) || !std::isfinite(psi)) {
    throw InvalidArgument("halfin-whitt: psi must be finite and >= 0");
  }
  if (psi == 0.0) return -std::numeric_limits<double>::infinity();
  return kLogSqrt2Pi + std::log(psi) + std::log(normal_cdf(psi)) + 0.5 * psi * psi;
}

double hw_delay_probability(double psi) {
  const double g = hw_log_odds(psi);
  if (g > 0.0) {
    const double e = std::exp(-g);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(g));
}

HwSolution hw_solve_psi(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("halfin-whitt: alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (alpha < kMinDelayProbability) {
    throw InvalidArgument("halfin-whitt: alpha below the underflow floor 1e-300");
  }
  if (alpha == 1.0) return {0.0, 1.0, 0.0};

  // Target log-odds log(1/alpha - 1), formed without cancellation.
  const double target = std::log1p(-alpha) - std::log(alpha);

  // Bisection on log(psi) over (1e-300, 50]: the log-odds are strictly
  // increasing in psi, and the log scale resolves targets close to alpha = 1
  // where psi itself is tiny.
  double lo = std::log(1e-300);
  double hi = std::log(kPsiMax);
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    if (hw_log_odds(std::exp(mid)) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  double psi_lo = std::exp(lo);
  double psi_hi = std::exp(hi);
  double psi = 0.5 * (psi_lo + psi_hi);
  for (int iter = 0; iter < 30; ++iter) {
    const double f = hw_log_odds(psi) - target;
    if (f == 0.0) break;
    if (f < 0.0) {
      psi_lo = psi;
    } else {
      psi_hi = psi;
    }
    double next = psi - f / log_odds_slope(psi);
    if (!(next >= psi_lo && next <= psi_hi)) next = 0.5 * (psi_lo + psi_hi);
    const double step = std::abs(next - psi);
    psi = next;
    if (step <= 1e-15 * psi) break;
  }

  return {psi, alpha, std::abs(hw_delay_probability(psi) - alpha)};
}

}  // namespace hwqos
