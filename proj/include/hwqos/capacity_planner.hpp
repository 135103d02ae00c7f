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

// Heavy-traffic sizing of a GI/H/n cloud for four QoS classes:
//
//   ZWT  zero waiting        P{Q_n >= n} -> 0,   1 - rho_n ~ n^-k1
//   MWT  minimal waiting     P{Q_n >= n} -> alpha, L <= (1 - rho_n) sqrt(n) <= U
//   BWT  bounded waiting     P{W_n > t1} ~ exp(-n^p), (1 - rho_n) n / n^p -> tau
//   PWT  probabilistic wait  P{W_n > t2} -> delta, (1 - rho_n) n -> gamma

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hwqos/hw_solver.hpp"
#include "hwqos/rng.hpp"
#include "hwqos/stochastic_models.hpp"

namespace hwqos {

// ---------------------------------------------------------------------------
// QoS requirements

struct Zwt {
  double decay = 0.25;  // k1 in f(n) = n^-k1, 0 < k1 < 1/2
};

struct Mwt {
  double alpha = 0.005;  // limiting waiting probability, 0 < alpha < 1
};

struct Bwt {
  double t1 = 0.5;             // waiting-time threshold
  double tail_exponent = 0.25; // p in delta_n = exp(-n^p), 0 < p < 1/2
};

struct Pwt {
  double t2 = 1.0;     // waiting-time threshold
  double delta = 0.1;  // limiting P{W > t2}, 0 < delta < 1
};

using QosRequirement = std::variant<Zwt, Mwt, Bwt, Pwt>;

enum class QosClass { zwt, mwt, bwt, pwt };

QosClass class_of(const QosRequirement& qos) noexcept;
std::string_view to_string(QosClass c) noexcept;
std::optional<QosClass> parse_qos_class(std::string_view name) noexcept;

/// Throws InvalidArgument naming the violated parameter range.
void validate(const QosRequirement& qos);

// ---------------------------------------------------------------------------
// MWT bounds

struct MwtBounds {
  double lower = 0.0;  // L
  double upper = 0.0;  // U
  HwSolution psi_lower;  // solves alpha
  HwSolution psi_upper;  // solves alpha / k
  std::vector<double> beta_lower;
  std::vector<double> beta_upper;
  std::size_t argmax = 0;  // first branch attaining the max in L
};

/// Bounds on lim (1 - rho_n) sqrt(n) for the MWT class with arrival cv c.
MwtBounds mwt_bounds(const HyperExpService& svc, double c, double alpha);

/// Tighter upper bound for Poisson arrivals, using the per-queue target
/// 1 - (1 - alpha)^(1/k) that independent split streams permit.
double mwt_upper_poisson(const HyperExpService& svc, double alpha);

/// sqrt(mu) * sum_j (1 + (c^2 - 1) P_j / 2) psi(alpha_j) sqrt(P_j / mu_j):
/// the staffing constant of a split system whose queue j waits with
/// probability alpha_j.
double allocation_objective(const HyperExpService& svc, double c, std::span<const double> alphas);

struct OptimizerOptions {
  double tolerance = 1e-9;  // stop when a full sweep improves less than this
  int max_sweeps = 500;
};

struct AllocationBound {
  double value = 0.0;
  std::vector<double> alphas;
  int sweeps = 0;
  bool converged = true;
};

/// Minimizes allocation_objective over sum_j alpha_j = alpha (the constraint
/// is active at the optimum). Pairwise-exchange coordinate descent with a
/// golden-section line search, seeded at alpha / k, so the result never
/// exceeds U. Non-convergence still returns the best feasible value.
AllocationBound mwt_upper_optimized(const HyperExpService& svc, double c, double alpha,
                                    const OptimizerOptions& options = {});

/// Limiting law of the normalized queue (Q_j - n_j) / sqrt(n_j) of an
/// M/M/n_j queue in the QED regime:
///   f(x) = alpha beta exp(-beta x)                      x > 0
///   f(x) = (1 - alpha) phi(x + beta) / Phi(beta)         x < 0
class NormalizedQueueDensity {
 public:
  NormalizedQueueDensity(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  double pdf(double x) const noexcept;
  /// P(X > 0), which is alpha by construction.
  double positive_mass() const noexcept { return alpha_; }

  /// Monotone coupling: u selects the piece (u < alpha -> positive), v in
  /// (0, 1) is pushed through the inverse CDF of that piece. For fixed (u, v)
  /// the result is non-decreasing in alpha when beta = psi(alpha).
  double transform(double u, double v) const noexcept;
  double sample(RngStream& rng) const;

 private:
  double alpha_;
  double beta_;
  double phi_beta_;
};

struct LevyBound {
  double value = 0.0;
  std::vector<double> alphas;
  double tail_estimate = 0.0;  // Monte Carlo P(sum_j w_j Q_j >= 0) at the returned point
  double tail_stderr = 0.0;
  std::size_t evaluations = 0;
  /// Set when no candidate could be certified and the Poisson bound was returned.
  bool fallback = false;
};

inline constexpr std::size_t kMinLevySamples = 100000;

/// Poisson-arrival upper bound with the exact split-system constraint
/// P(sum_j sqrt(P_j / mu_j) Q_j >= 0) <= alpha, Q_j ~ NormalizedQueueDensity.
/// The tail is estimated by Monte Carlo on common random numbers; a candidate
/// counts as feasible when estimate + 3 standard errors <= alpha.
LevyBound mwt_upper_levy(const HyperExpService& svc, double alpha, std::size_t samples,
                         RngStream& rng);

// ---------------------------------------------------------------------------
// BWT / PWT constants

/// tau = (mu^2 sigma^2 + c^2) / (2 mu t1).
double bwt_tau(const HyperExpService& svc, double c, double t1);

/// gamma = -(mu^2 sigma^2 + c^2) ln(delta) / (2 mu t2).
double pwt_gamma(const HyperExpService& svc, double c, double t2, double delta);

/// Heavy-traffic exponential law exp(-2 mu (1 - rho) n t / (mu^2 sigma^2 + c^2)).
double kingman_wait_tail(const HyperExpService& svc, double c, double rho, double n, double t);

// ---------------------------------------------------------------------------
// Machine counts

struct SizingResult {
  QosClass qos = QosClass::mwt;
  std::int64_t n = 1;     // count to provision (n_hi for MWT)
  std::int64_t n_lo = 1;  // equal to n except for MWT
  std::int64_t n_hi = 1;
  double rho = 0.0;
  /// Named intermediates actually used: psi, L, U, tau, gamma, mu, sigma2,
  /// c and the class parameters.
  std::map<std::string, double> constants;
};

/// Ceiling used by every machine count: snaps values within 1e-9 (relative)
/// of an integer to it before rounding up, then clamps to >= 1.
std::int64_t ceil_count(double x);

SizingResult machines_for(const QosRequirement& qos, const HyperExpService& svc, double c, double rho);

/// Recomputes the machine counts from SizingResult::constants alone.
SizingResult recompute_machines(const SizingResult& sizing);

/// Arrival-rate entry point: the smallest n with machines_for(qos, lambda /
/// (n mu)) <= n, separately for n_lo and n_hi. rho is reported at n.
SizingResult machines_for_rate(const QosRequirement& qos, const HyperExpService& svc, double c,
                               double lambda);

/// Largest traffic intensity n machines sustain under the heavy-traffic
/// rule (MWT: pair for L and U).
struct MaxRho {
  double rho = 0.0;
  double rho_lo = 0.0;  // using U (conservative)
  double rho_hi = 0.0;  // using L
};

MaxRho max_rho_for(const QosRequirement& qos, const HyperExpService& svc, double c, double n);

// ---------------------------------------------------------------------------
// Bound tightness

struct TightnessRatio {
  double r = 1.0;
  double r1 = 1.0;  // psi_U / psi_L, depends only on (k, alpha)
  double r2 = 1.0;  // sum over max of the branch weights, in [1, k]
};

double ratio_r1(std::size_t k, double alpha);
TightnessRatio tightness_ratio(const HyperExpService& svc, double c, double alpha);

}  // namespace hwqos
