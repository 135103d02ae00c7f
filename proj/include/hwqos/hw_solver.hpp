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

// Standard normal helpers and the Halfin-Whitt delay function
//
//   alpha(psi) = [1 + sqrt(2 pi) psi Phi(psi) exp(psi^2 / 2)]^-1,
//
// which maps the QED staffing level psi >= 0 to the limiting probability
// that an arriving job has to wait.

namespace hwqos {

double normal_pdf(double x) noexcept;

/// Phi(x), computed as erfc(-x / sqrt 2) / 2 (absolute error well under 1e-12).
double normal_cdf(double x) noexcept;

/// Inverse of Phi on (0, 1): rational approximation refined by one Halley
/// step against normal_cdf. Returns -inf / +inf at 0 / 1.
double normal_quantile(double p) noexcept;

/// Cheaper quantile without refinement (relative error ~1e-9), for Monte
/// Carlo transforms where the refinement would dominate the cost.
double normal_quantile_fast(double p) noexcept;

/// log(sqrt(2 pi) psi Phi(psi)) + psi^2 / 2, i.e. log(1/alpha - 1). Finite for
/// every psi > 0; -inf at psi = 0.
double hw_log_odds(double psi);

/// Forward delay function, evaluated in log space so psi up to ~50 neither
/// overflows nor raises (very large psi underflows cleanly to 0).
double hw_delay_probability(double psi);

/// Result of inverting the delay function for a target probability.
struct HwSolution {
  double psi = 0.0;
  double alpha = 1.0;
  /// |hw_delay_probability(psi) - alpha|.
  double residual = 0.0;
};

/// Smallest alpha the solver accepts; below this the target underflows.
inline constexpr double kMinDelayProbability = 1e-300;

/// Solves hw_delay_probability(psi) = alpha for psi by bisection on [0, 50]
/// followed by guarded Newton steps. alpha = 1 gives psi = 0.
HwSolution hw_solve_psi(double alpha);

}  // namespace hwqos
