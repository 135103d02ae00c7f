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

#include "hwqos/des_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <thread>
#include <utility>

#include <boost/math/distributions/students_t.hpp>

#include "hwqos/errors.hpp"
#include "hwqos/kernels.hpp"

namespace hwqos {

namespace {

struct Job {
  double arrival;
  double service;
  std::size_t id;
};

// Time integrals over one batch window for one pool.
struct Areas {
  double duration = 0.0;
  double busy = 0.0;      // integral of busy servers
  double full = 0.0;      // time with all servers busy
  double waiting = 0.0;   // integral of jobs in line
};

struct Pool {
  std::size_t servers = 1;
  std::size_t busy = 0;
  std::deque<Job> line;
  std::vector<Areas> areas;  // per batch
  std::size_t full_epochs = 0;
};

struct Departure {
  double time;
  std::size_t pool;
  bool operator>(const Departure& o) const noexcept { return time > o.time; }
};

struct RunSpec {
  const RenewalArrival* arrival;
  const HyperExpService* service;
  std::vector<std::size_t> servers;  // one pool, or one per branch
  bool split = false;
  std::size_t warmup = 0;
  std::size_t measured = 0;
  std::size_t batches = 32;
  std::uint64_t seed = 1;
  std::uint64_t stream_base = 0;
};

struct RunOutput {
  std::vector<double> waits;       // by measured job index
  std::vector<std::uint32_t> pool; // pool of each measured job
  std::vector<double> arrivals;    // arrival epoch of each measured job
  std::vector<Pool> pools;
  std::size_t union_epochs = 0;
  std::size_t any_full_epochs = 0;
  double window = 0.0;
};

std::size_t batch_of(std::size_t index, std::size_t measured, std::size_t batches) {
  const std::size_t size = measured / batches;
  return std::min(index / size, batches - 1);
}

RunOutput run(const RunSpec& spec) {
  const std::size_t total = spec.warmup + spec.measured;
  RngStream arrival_rng(spec.seed, spec.stream_base + 0);
  RngStream branch_rng(spec.seed, spec.stream_base + 1);
  RngStream duration_rng(spec.seed, spec.stream_base + 2);

  RunOutput out;
  out.waits.assign(spec.measured, 0.0);
  out.pool.assign(spec.measured, 0);
  out.arrivals.assign(spec.measured, 0.0);
  out.pools.resize(spec.servers.size());
  std::size_t total_servers = 0;
  for (std::size_t i = 0; i < spec.servers.size(); ++i) {
    out.pools[i].servers = spec.servers[i];
    out.pools[i].areas.resize(spec.batches);
    total_servers += spec.servers[i];
  }

  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;
  const auto branches = spec.service->branches();

  double now = 0.0;
  double next_arrival = spec.arrival->sample(arrival_rng);
  std::size_t arrived = 0;
  std::size_t in_line = 0;
  // Batch receiving time integrals; none before the first measured arrival
  // or after the last one.
  std::optional<std::size_t> batch;
  double window_start = 0.0;

  auto advance = [&](double t) {
    const double dt = t - now;
    if (batch && dt > 0.0) {
      for (Pool& p : out.pools) {
        Areas& a = p.areas[*batch];
        a.duration += dt;
        a.busy += dt * static_cast<double>(p.busy);
        a.waiting += dt * static_cast<double>(p.line.size());
        if (p.busy == p.servers) a.full += dt;
      }
    }
    now = t;
  };

  auto start = [&](std::size_t pool_index, const Job& job) {
    if (job.id >= spec.warmup) out.waits[job.id - spec.warmup] = now - job.arrival;
    departures.push({now + job.service, pool_index});
  };

  for (;;) {
    const bool arrivals_left = arrived < total;
    if (!arrivals_left && in_line == 0) break;
    const double next_departure =
        departures.empty() ? std::numeric_limits<double>::infinity() : departures.top().time;

    if (arrivals_left && next_arrival < next_departure) {
      advance(next_arrival);
      const std::size_t id = arrived++;
      const std::size_t branch = spec.service->sample_branch(branch_rng);
      const double service = duration_rng.exponential(branches[branch].rate);
      const std::size_t pool_index = spec.split ? branch : 0;

      if (id >= spec.warmup) {
        const std::size_t m = id - spec.warmup;
        if (m == 0) window_start = now;
        out.pool[m] = static_cast<std::uint32_t>(pool_index);
        out.arrivals[m] = now;
        std::size_t jobs = 0;
        bool any_full = false;
        for (Pool& p : out.pools) {
          jobs += p.busy + p.line.size();
          if (p.busy == p.servers) {
            ++p.full_epochs;
            any_full = true;
          }
        }
        if (jobs >= total_servers) ++out.union_epochs;
        if (any_full) ++out.any_full_epochs;
        if (m + 1 < spec.measured) {
          batch = batch_of(m, spec.measured, spec.batches);
        } else {
          batch.reset();
          out.window = now - window_start;
        }
      }

      Pool& p = out.pools[pool_index];
      const Job job{now, service, id};
      if (p.busy < p.servers) {
        ++p.busy;
        start(pool_index, job);
      } else {
        p.line.push_back(job);
        ++in_line;
      }
      next_arrival = now + spec.arrival->sample(arrival_rng);
    } else {
      const Departure d = departures.top();
      departures.pop();
      advance(d.time);
      Pool& p = out.pools[d.pool];
      if (!p.line.empty()) {
        const Job job = p.line.front();
        p.line.pop_front();
        --in_line;
        start(d.pool, job);
      } else {
        --p.busy;
      }
      // Work conservation: a server may only idle when nobody waits.
      if (!p.line.empty() && p.busy != p.servers) {
        throw SimulationError("work conservation violated: idle server with a non-empty line");
      }
    }
  }
  return out;
}

double t_quantile(std::size_t batches) {
  const boost::math::students_t_distribution<double> dist(static_cast<double>(batches - 1));
  return boost::math::quantile(dist, 0.975);
}

// Estimate from per-batch values around a given overall point estimate.
Estimate batch_estimate(double overall, std::span<const double> per_batch) {
  Estimate e;
  e.value = overall;
  const SampleMoments m = sample_moments(per_batch);
  e.std_error = std::sqrt(m.variance / static_cast<double>(per_batch.size()));
  e.half_width = t_quantile(per_batch.size()) * e.std_error;
  return e;
}

// Arrival-indexed metrics from waits listed in service-start (= FCFS) order.
void fill_wait_metrics(SimMetrics& m, std::span<const double> waits, std::size_t batches,
                       const std::vector<double>& thresholds) {
  const std::size_t n = waits.size();
  const std::size_t size = n / batches;
  std::vector<double> frac(batches);
  auto slice = [&](std::size_t b) {
    const std::size_t begin = b * size;
    const std::size_t end = (b + 1 == batches) ? n : begin + size;
    return waits.subspan(begin, end - begin);
  };
  auto fraction_above = [&](double t) {
    for (std::size_t b = 0; b < batches; ++b) {
      const auto s = slice(b);
      frac[b] = static_cast<double>(kernels::count_greater(s, t)) / static_cast<double>(s.size());
    }
    return batch_estimate(static_cast<double>(kernels::count_greater(waits, t)) / static_cast<double>(n), frac);
  };

  m.wait_probability = fraction_above(0.0);
  m.wait_tail.clear();
  for (double t : thresholds) m.wait_tail.push_back({t, fraction_above(t)});

  for (std::size_t b = 0; b < batches; ++b) frac[b] = sample_moments(slice(b)).mean;
  m.mean_wait = batch_estimate(sample_moments(waits).mean, frac);
}

void fill_time_metrics(SimMetrics& m, const Pool& pool) {
  const std::size_t batches = pool.areas.size();
  Areas total;
  for (const Areas& a : pool.areas) {
    total.duration += a.duration;
    total.busy += a.busy;
    total.full += a.full;
    total.waiting += a.waiting;
  }
  const double servers = static_cast<double>(pool.servers);
  std::vector<double> util(batches);
  std::vector<double> full(batches);
  std::vector<double> line(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const Areas& a = pool.areas[b];
    const double d = a.duration > 0.0 ? a.duration : 1.0;
    util[b] = a.busy / (servers * d);
    full[b] = a.full / d;
    line[b] = a.waiting / d;
  }
  const double d = total.duration > 0.0 ? total.duration : 1.0;
  m.utilization = batch_estimate(total.busy / (servers * d), util);
  m.busy_time_fraction = batch_estimate(total.full / d, full);
  m.mean_queue_length = batch_estimate(total.waiting / d, line);
}

std::vector<double> sorted_thresholds(std::vector<double> t) {
  for (double v : t) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("tail thresholds must be positive");
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

void check_horizon(std::size_t measured, std::size_t batches) {
  if (batches < 10) throw SimulationError("at least 10 batches are required for batch means");
  if (measured < batches) {
    throw SimulationError("horizon too short: " + std::to_string(measured) +
                          " measured jobs cannot fill " + std::to_string(batches) + " batches");
  }
}

}  // namespace

std::size_t default_warmup(std::size_t measured_jobs, std::size_t servers) {
  return std::max(measured_jobs / 5, 10 * servers);
}

SimMetrics simulate(const SimConfig& cfg) {
  if (cfg.servers < 1) throw InvalidArgument("simulation: at least one server is required");
  check_horizon(cfg.measured_jobs, cfg.batches);
  const std::vector<double> thresholds = sorted_thresholds(cfg.tail_thresholds);

  RunSpec spec;
  spec.arrival = &cfg.arrival;
  spec.service = &cfg.service;
  spec.servers = {cfg.servers};
  spec.warmup = cfg.warmup_jobs.value_or(default_warmup(cfg.measured_jobs, cfg.servers));
  spec.measured = cfg.measured_jobs;
  spec.batches = cfg.batches;
  spec.seed = cfg.seed;
  spec.stream_base = cfg.stream_base;
  const RunOutput out = run(spec);

  SimMetrics m;
  m.servers = cfg.servers;
  m.measured_jobs = cfg.measured_jobs;
  m.batches = cfg.batches;
  m.window = out.window;
  m.arrival_rate = out.window > 0.0 ? static_cast<double>(cfg.measured_jobs - 1) / out.window : 0.0;
  fill_wait_metrics(m, out.waits, cfg.batches, thresholds);
  fill_time_metrics(m, out.pools.front());
  return m;
}

SplitMetrics simulate_split(const SplitConfig& cfg, std::size_t horizon, std::uint64_t seed,
                            std::uint64_t stream_base) {
  const std::size_t k = cfg.service.size();
  if (cfg.servers.size() != k) throw InvalidArgument("split simulation: one server count per job type");
  for (std::size_t s : cfg.servers) {
    if (s < 1) throw InvalidArgument("split simulation: every pool needs at least one server");
  }
  check_horizon(horizon, cfg.batches);
  const std::vector<double> thresholds = sorted_thresholds(cfg.tail_thresholds);

  std::size_t total_servers = 0;
  for (std::size_t s : cfg.servers) total_servers += s;

  RunSpec spec;
  spec.arrival = &cfg.arrival;
  spec.service = &cfg.service;
  spec.servers = cfg.servers;
  spec.split = true;
  spec.warmup = cfg.warmup_jobs.value_or(default_warmup(horizon, total_servers));
  spec.measured = horizon;
  spec.batches = cfg.batches;
  spec.seed = seed;
  spec.stream_base = stream_base;
  const RunOutput out = run(spec);

  SplitMetrics result;
  const double epochs = static_cast<double>(horizon);
  result.union_event_frequency = static_cast<double>(out.union_epochs) / epochs;
  result.any_full_frequency = static_cast<double>(out.any_full_epochs) / epochs;
  result.types.resize(k);

  std::vector<double> waits;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < k; ++i) {
    waits.clear();
    gaps.clear();
    double last = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < horizon; ++j) {
      if (out.pool[j] != i) continue;
      waits.push_back(out.waits[j]);
      if (!std::isnan(last)) gaps.push_back(out.arrivals[j] - last);
      last = out.arrivals[j];
    }
    if (waits.size() < cfg.batches) {
      throw SimulationError("horizon too short: job type " + std::to_string(i + 1) +
                            " received fewer measured jobs than batches");
    }
    TypeMetrics& t = result.types[i];
    t.metrics.servers = cfg.servers[i];
    t.metrics.measured_jobs = waits.size();
    t.metrics.batches = cfg.batches;
    t.metrics.window = out.window;
    t.metrics.arrival_rate = out.window > 0.0 ? static_cast<double>(gaps.size()) / out.window : 0.0;
    fill_wait_metrics(t.metrics, waits, cfg.batches, thresholds);
    fill_time_metrics(t.metrics, out.pools[i]);
    t.interarrival_cv = sample_moments(gaps).cv;
    t.full_at_epoch = static_cast<double>(out.pools[i].full_epochs) / epochs;
  }
  return result;
}

std::vector<ValidationRow> validate_class(const QosRequirement& qos, const HyperExpService& svc,
                                          const RenewalArrival& arrival, const std::vector<double>& rho_grid,
                                          const ValidationSettings& settings) {
  const QosClass cls = class_of(qos);
  if (cls != QosClass::mwt && cls != QosClass::bwt) {
    throw InvalidArgument("validation supports the MWT and BWT classes only");
  }
  const double c = arrival.cv();

  std::vector<ValidationRow> rows;
  for (double rho : rho_grid) {
    const SizingResult sizing = machines_for(qos, svc, c, rho);
    auto make = [&](std::string bound, std::int64_t n) {
      ValidationRow r;
      r.qos = cls;
      r.bound = std::move(bound);
      r.rho = rho;
      r.n = n;
      r.lambda = rho * static_cast<double>(n) * svc.rate();
      if (cls == QosClass::mwt) {
        r.predicted = std::get<Mwt>(qos).alpha;
      } else {
        r.predicted = std::exp(-std::pow(static_cast<double>(n), std::get<Bwt>(qos).tail_exponent));
      }
      return r;
    };
    if (cls == QosClass::mwt) {
      rows.push_back(make("lo", sizing.n_lo));
      rows.push_back(make("hi", sizing.n_hi));
    } else {
      rows.push_back(make("n", sizing.n));
    }
  }

  auto simulate_row = [&](std::size_t index) {
    ValidationRow& r = rows[index];
    SimConfig cfg{arrival.with_rate(r.lambda), svc, static_cast<std::size_t>(r.n), settings.measured_jobs,
                  settings.batches, settings.warmup_jobs, settings.seed, 3 * static_cast<std::uint64_t>(index), {}};
    if (cls == QosClass::bwt) cfg.tail_thresholds = {std::get<Bwt>(qos).t1};
    const SimMetrics m = simulate(cfg);
    r.wait_probability = m.wait_probability;
    r.busy_time_fraction = m.busy_time_fraction;
    r.simulated = (cls == QosClass::mwt) ? m.wait_probability : m.wait_tail.front().probability;
    r.measured_jobs = m.measured_jobs;
  };

  unsigned threads = settings.threads != 0 ? settings.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) simulate_row(i);
    return rows;
  }

  std::vector<std::exception_ptr> errors(rows.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < rows.size(); i += threads) {
        try {
          simulate_row(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

}  // namespace hwqos
