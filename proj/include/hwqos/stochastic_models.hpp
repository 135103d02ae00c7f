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

// Service-time and arrival-process models of the GI/H/n queue.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hwqos/rng.hpp"

namespace hwqos {

/// One exponential phase of a hyper-exponential law: chosen with probability
/// `weight`, then exponential with rate `rate`.
struct Branch {
  double weight = 1.0;
  double rate = 1.0;

  friend bool operator==(const Branch&, const Branch&) = default;
};

/// Hyper-exponential service time, P(v > t) = sum_i P_i exp(-mu_i t).
///
/// Canonical form: branches sorted by strictly increasing rate, all weights
/// positive and summing to one. Weight vectors that miss one by at most
/// kWeightTolerance are renormalized; anything else is rejected.
class HyperExpService {
 public:
  static constexpr double kWeightTolerance = 1e-12;

  explicit HyperExpService(std::vector<Branch> branches);

  /// Builds from parallel rate and weight lists (the config file layout).
  static HyperExpService from_lists(std::span<const double> rates, std::span<const double> weights);
  static HyperExpService exponential(double rate);

  std::size_t size() const noexcept { return branches_.size(); }
  std::span<const Branch> branches() const noexcept { return branches_; }

  /// Service rate mu = (sum P_i / mu_i)^-1.
  double rate() const noexcept { return rate_; }
  double mean() const noexcept { return 1.0 / rate_; }
  /// sigma^2 = 2 sum P_i / mu_i^2 - (sum P_i / mu_i)^2.
  double variance() const noexcept { return variance_; }
  /// mu^2 sigma^2, which is >= 1 with equality iff k = 1.
  double scv() const noexcept { return rate_ * rate_ * variance_; }

  double survival(double t) const noexcept;
  double cdf(double t) const noexcept { return 1.0 - survival(t); }

  /// Composition sampling: branch index from `branch_rng`, duration from
  /// `duration_rng`. The simulator keeps the two streams apart so that split
  /// and unsplit systems see identical job types and durations.
  std::size_t sample_branch(RngStream& branch_rng) const;
  double sample(RngStream& branch_rng, RngStream& duration_rng) const;

  friend bool operator==(const HyperExpService& a, const HyperExpService& b) {
    return a.branches_ == b.branches_;
  }

 private:
  std::vector<Branch> branches_;
  std::vector<double> cumulative_;
  double rate_ = 1.0;
  double variance_ = 1.0;
};

struct ServiceMoments {
  double mu = 0.0;
  double sigma2 = 0.0;
};

ServiceMoments service_moments(const HyperExpService& svc);

/// Single-stream convenience form of HyperExpService::sample.
double sample_service(const HyperExpService& svc, RngStream& rng);

enum class ArrivalKind { poisson, erlang, deterministic, hyperexp };

std::string_view to_string(ArrivalKind kind) noexcept;

/// Renewal arrival process with rate lambda and inter-arrival cv c.
class RenewalArrival {
 public:
  static RenewalArrival poisson(double rate);
  static RenewalArrival erlang(unsigned stages, double rate);
  static RenewalArrival deterministic(double rate);
  /// Inter-arrival times follow `shape` rescaled to mean 1/rate; c is the
  /// shape's own coefficient of variation.
  static RenewalArrival hyperexp(double rate, const HyperExpService& shape);

  ArrivalKind kind() const noexcept { return kind_; }
  double rate() const noexcept { return rate_; }
  double cv() const noexcept { return cv_; }
  unsigned stages() const noexcept { return stages_; }
  /// Unit-mean shape for the hyper-exponential kind.
  const std::vector<Branch>& shape() const noexcept { return shape_; }

  /// Same kind and shape, different rate.
  RenewalArrival with_rate(double rate) const;

  double sample(RngStream& rng) const;

 private:
  RenewalArrival(ArrivalKind kind, double rate, unsigned stages, std::vector<Branch> shape);

  ArrivalKind kind_;
  double rate_;
  unsigned stages_;
  double cv_;
  std::vector<Branch> shape_;
  std::vector<double> cumulative_;
};

double sample_interarrival(const RenewalArrival& arr, RngStream& rng);

/// Coefficient of variation of the sub-stream obtained by keeping each
/// arrival independently with probability p: sqrt(1 + (c^2 - 1) p).
double split_cv(double c, double p);

/// Sample mean / variance / cv of a sequence, via the moment-sum kernel.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double cv = 0.0;
};

SampleMoments sample_moments(std::span<const double> x);

}  // namespace hwqos
