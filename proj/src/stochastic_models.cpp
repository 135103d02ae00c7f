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

#include "hwqos/stochastic_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hwqos/errors.hpp"
#include "hwqos/kernels.hpp"

namespace hwqos {

namespace {

std::vector<double> cumulative_weights(std::span<const Branch> branches) {
  std::vector<double> cum;
  cum.reserve(branches.size());
  double acc = 0.0;
  for (const Branch& b : branches) {
    acc += b.weight;
    cum.push_back(acc);
  }
  // Guard the last bucket against rounding so a uniform draw always lands.
  if (!cum.empty()) cum.back() = 1.0;
  return cum;
}

std::size_t pick(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(idx, cumulative.size() - 1);
}

void require_positive_rate(double rate, const char* what) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InvalidArgument(std::string(what) + ": rate must be positive and finite");
  }
}

}  // namespace

HyperExpService::HyperExpService(std::vector<Branch> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw InvalidArgument("hyper-exponential service needs at least one branch");
  double total = 0.0;
  for (const Branch& b : branches_) {
    if (!(b.rate > 0.0) || !std::isfinite(b.rate)) {
      throw InvalidArgument("hyper-exponential service: branch rates must be positive and finite");
    }
    if (!(b.weight > 0.0) || !std::isfinite(b.weight)) {
      throw InvalidArgument("hyper-exponential service: branch weights must be positive");
    }
    total += b.weight;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) {
    throw InvalidArgument("hyper-exponential service: weights must sum to 1 (got " +
                          std::to_string(total) + ")");
  }
  for (Branch& b : branches_) b.weight /= total;

  std::sort(branches_.begin(), branches_.end(),
            [](const Branch& a, const Branch& b) { return a.rate < b.rate; });
  for (std::size_t i = 1; i < branches_.size(); ++i) {
    if (!(branches_[i - 1].rate < branches_[i].rate)) {
      throw InvalidArgument("hyper-exponential service: branch rates must be distinct");
    }
  }

  double m1 = 0.0;
  double m2 = 0.0;
  for (const Branch& b : branches_) {
    m1 += b.weight / b.rate;
    m2 += b.weight / (b.rate * b.rate);
  }
  rate_ = 1.0 / m1;
  variance_ = 2.0 * m2 - m1 * m1;
  cumulative_ = cumulative_weights(branches_);
}

HyperExpService HyperExpService::from_lists(std::span<const double> rates,
                                            std::span<const double> weights) {
  if (rates.size() != weights.size()) {
    throw InvalidArgument("hyper-exponential service: rate and weight lists differ in length");
  }
  std::vector<Branch> branches;
  branches.reserve(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) branches.push_back({weights[i], rates[i]});
  return HyperExpService(std::move(branches));
}

HyperExpService HyperExpService::exponential(double rate) {
  return HyperExpService({Branch{1.0, rate}});
}

double HyperExpService::survival(double t) const noexcept {
  if (t <= 0.0) return 1.0;
  double s = 0.0;
  for (const Branch& b : branches_) s += b.weight * std::exp(-b.rate * t);
  return s;
}

std::size_t HyperExpService::sample_branch(RngStream& branch_rng) const {
  if (branches_.size() == 1) return 0;
  return pick(cumulative_, branch_rng.uniform());
}

double HyperExpService::sample(RngStream& branch_rng, RngStream& duration_rng) const {
  const std::size_t i = sample_branch(branch_rng);
  return duration_rng.exponential(branches_[i].rate);
}

ServiceMoments service_moments(const HyperExpService& svc) {
  return {svc.rate(), svc.variance()};
}

double sample_service(const HyperExpService& svc, RngStream& rng) { return svc.sample(rng, rng); }

std::string_view to_string(ArrivalKind kind) noexcept {
  switch (kind) {
    case ArrivalKind::poisson:
      return "poisson";
    case ArrivalKind::erlang:
      return "erlang";
    case ArrivalKind::deterministic:
      return "deterministic";
    case ArrivalKind::hyperexp:
      return "hyperexp";
  }
  return "unknown";
}

RenewalArrival::RenewalArrival(ArrivalKind kind, double rate, unsigned stages,
                               std::vector<Branch> shape)
    : kind_(kind), rate_(rate), stages_(stages), cv_(0.0), shape_(std::move(shape)) {
  require_positive_rate(rate_, "arrival process");
  switch (kind_) {
    case ArrivalKind::poisson:
      cv_ = 1.0;
      break;
    case ArrivalKind::deterministic:
      cv_ = 0.0;
      break;
    case ArrivalKind::erlang:
      if (stages_ < 1) throw InvalidArgument("erlang arrivals need at least one stage");
      cv_ = 1.0 / std::sqrt(static_cast<double>(stages_));
      break;
    case ArrivalKind::hyperexp: {
      double m2 = 0.0;
      for (const Branch& b : shape_) m2 += b.weight / (b.rate * b.rate);
      // Unit-mean shape: variance = 2 m2 - 1 = c^2.
      cv_ = std::sqrt(std::max(0.0, 2.0 * m2 - 1.0));
      cumulative_ = cumulative_weights(shape_);
      break;
    }
  }
}

RenewalArrival RenewalArrival::poisson(double rate) {
  return RenewalArrival(ArrivalKind::poisson, rate, 1, {});
}

RenewalArrival RenewalArrival::erlang(unsigned stages, double rate) {
  return RenewalArrival(ArrivalKind::erlang, rate, stages, {});
}

RenewalArrival RenewalArrival::deterministic(double rate) {
  return RenewalArrival(ArrivalKind::deterministic, rate, 1, {});
}

RenewalArrival RenewalArrival::hyperexp(double rate, const HyperExpService& shape) {
  std::vector<Branch> unit;
  unit.reserve(shape.size());
  for (const Branch& b : shape.branches()) unit.push_back({b.weight, b.rate / shape.rate()});
  return RenewalArrival(ArrivalKind::hyperexp, rate, 1, std::move(unit));
}

RenewalArrival RenewalArrival::with_rate(double rate) const {
  return RenewalArrival(kind_, rate, stages_, shape_);
}

double RenewalArrival::sample(RngStream& rng) const {
  switch (kind_) {
    case ArrivalKind::poisson:
      return rng.exponential(rate_);
    case ArrivalKind::deterministic:
      return 1.0 / rate_;
    case ArrivalKind::erlang: {
      double log_sum = 0.0;
      for (unsigned s = 0; s < stages_; ++s) log_sum += std::log(rng.uniform());
      return -log_sum / (rate_ * static_cast<double>(stages_));
    }
    case ArrivalKind::hyperexp: {
      const std::size_t i = pick(cumulative_, rng.uniform());
      return rng.exponential(shape_[i].rate * rate_);
    }
  }
  return 1.0 / rate_;
}

double sample_interarrival(const RenewalArrival& arr, RngStream& rng) { return arr.sample(rng); }

double split_cv(double c, double p) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("split_cv: c must be >= 0");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("split_cv: p must lie in (0, 1]");
  return std::sqrt(1.0 + (c * c - 1.0) * p);
}

SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  m.count = x.size();
  if (x.empty()) return m;
  const double shift = x.front();
  const kernels::MomentSums s = kernels::shifted_moment_sums(x, shift);
  const double n = static_cast<double>(s.count);
  const double d = s.sum / n;
  m.mean = shift + d;
  if (s.count > 1) {
    m.variance = std::max(0.0, (s.sum_sq - n * d * d) / (n - 1.0));
  }
  m.cv = m.mean != 0.0 ? std::sqrt(m.variance) / std::abs(m.mean) : 0.0;
  return m;
}

}  // namespace hwqos
