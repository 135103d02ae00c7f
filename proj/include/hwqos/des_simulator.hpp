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

// Event-driven simulation of the GI/H/n FCFS queue, and of the split system
// in which an omniscient scheduler sends each job type to its own pool.
//
// Seed discipline: every run draws from three RngStreams derived from
// (seed, stream_base + {0, 1, 2}) for inter-arrival times, branch (job type)
// selection and service durations. Service requirements are drawn at arrival,
// so a split run and an unsplit run with the same seed see the same jobs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hwqos/capacity_planner.hpp"
#include "hwqos/stochastic_models.hpp"

namespace hwqos {

struct SimConfig {
  RenewalArrival arrival;
  HyperExpService service;
  std::size_t servers = 1;
  std::size_t measured_jobs = 100000;
  std::size_t batches = 32;
  /// Defaults to max(measured_jobs / 5, 10 * servers).
  std::optional<std::size_t> warmup_jobs;
  std::uint64_t seed = 1;
  std::uint64_t stream_base = 0;
  /// Thresholds t for the waiting-time tail P{W > t}.
  std::vector<double> tail_thresholds;
};

/// Point estimate with batch-means uncertainty.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  double half_width = 0.0;  // 95% confidence
};

struct TailPoint {
  double t = 0.0;
  Estimate probability;  // fraction of measured arrivals with W > t
};

struct SimMetrics {
  std::size_t servers = 0;
  std::size_t measured_jobs = 0;
  std::size_t batches = 0;
  /// Arrival average of {all servers busy}: fraction of measured jobs that wait.
  Estimate wait_probability;
  /// Time average of {Q >= n} over the measurement window. Differs from the
  /// arrival average for non-Poisson arrivals.
  Estimate busy_time_fraction;
  std::vector<TailPoint> wait_tail;  // ascending t
  Estimate mean_wait;
  Estimate utilization;
  /// Time-average number of jobs waiting in line.
  Estimate mean_queue_length;
  /// Measured arrivals per unit time over the measurement window.
  double arrival_rate = 0.0;
  double window = 0.0;
};

std::size_t default_warmup(std::size_t measured_jobs, std::size_t servers);

/// Runs one replication. Unstable systems are simulated over the finite
/// horizon. Throws SimulationError if the horizon cannot fill the batches.
SimMetrics simulate(const SimConfig& cfg);

struct SplitConfig {
  RenewalArrival arrival;
  /// Branch i defines job type i (probability P_i, exponential rate mu_i).
  HyperExpService service;
  std::vector<std::size_t> servers;  // n_i per type
  std::size_t batches = 32;
  std::optional<std::size_t> warmup_jobs;
  std::vector<double> tail_thresholds;
};

struct TypeMetrics {
  SimMetrics metrics;
  /// cv of the measured inter-arrival times seen by this type's pool.
  double interarrival_cv = 0.0;
  /// Fraction of all measured arrival epochs at which pool i is full.
  double full_at_epoch = 0.0;
};

struct SplitMetrics {
  std::vector<TypeMetrics> types;
  /// Fraction of measured arrival epochs with sum_i Q_i >= sum_i n_i.
  double union_event_frequency = 0.0;
  /// Fraction of measured arrival epochs at which some pool is full.
  double any_full_frequency = 0.0;
};

/// `horizon` is the number of measured arrivals (all types together).
SplitMetrics simulate_split(const SplitConfig& cfg, std::size_t horizon, std::uint64_t seed,
                            std::uint64_t stream_base = 0);

struct ValidationSettings {
  std::size_t measured_jobs = 1000000;
  std::size_t batches = 32;
  std::optional<std::size_t> warmup_jobs;
  std::uint64_t seed = 1;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct ValidationRow {
  QosClass qos = QosClass::mwt;
  std::string bound;  // "lo" / "hi" for MWT, "n" otherwise
  double rho = 0.0;
  std::int64_t n = 0;
  double lambda = 0.0;
  /// MWT: alpha; BWT: delta_n = exp(-n^p).
  double predicted = 0.0;
  /// MWT: measured wait probability; BWT: measured P{W > t1}.
  Estimate simulated;
  Estimate wait_probability;
  /// Time average of {Q >= n}; equals the wait probability under Poisson arrivals.
  Estimate busy_time_fraction;
  std::size_t measured_jobs = 0;
};

/// For each rho: sizes the system with machines_for (both MWT bounds), runs
/// simulate at lambda = rho n mu and reports predicted vs measured. Grid
/// points run in parallel; rows come back in grid order and each point's
/// streams depend only on its index.
std::vector<ValidationRow> validate_class(const QosRequirement& qos, const HyperExpService& svc,
                                          const RenewalArrival& arrival, const std::vector<double>& rho_grid,
                                          const ValidationSettings& settings = {});

}  // namespace hwqos
