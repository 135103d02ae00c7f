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

// Experiment descriptions and the report / CSV writers behind the CLI.
//
// Config files are INI: `key = value` lines under `[section]` headers, `#` or
// `;` comments. Lists are comma separated, optionally bracketed. Grids are
// either lists or `start:stop:step`.
//
//   seed = 7
//   [service]   mu = 1, 8, 20      p = 0.6, 0.25, 0.15
//   [arrival]   kind = poisson|erlang|deterministic|hyperexp  rate  stages  mu  p
//   [qos]       class  decay  alpha  t1  p  t2  delta
//   [plan]      rho | lambda   levy_samples
//   [sweep]     variable = rho|lambda|n   grid
//   [sim]       measured_jobs  batches  warmup_jobs  threads
//   [ratio]     k  alpha
//   [output]    path

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hwqos/capacity_planner.hpp"
#include "hwqos/des_simulator.hpp"
#include "hwqos/stochastic_models.hpp"

namespace hwqos {

enum class SweepVariable { rho, lambda, n };

std::string_view to_string(SweepVariable v) noexcept;

struct ExperimentSpec {
  std::string scenario = "default";
  /// Defaults to exponential service with rate 0.3.
  HyperExpService service = HyperExpService::exponential(0.3);
  /// True when the config supplied [service]; the ratio table then adds r2.
  bool service_given = false;
  RenewalArrival arrival = RenewalArrival::poisson(1.0);

  /// Parameters of every class; `qos_class` picks one (curves default to all).
  Zwt zwt;
  Mwt mwt;
  Bwt bwt;
  Pwt pwt;
  std::optional<QosClass> qos_class;

  std::optional<double> rho;
  std::optional<double> lambda;
  /// Lévy bound sample count for MWT plans; 0 skips it.
  std::size_t levy_samples = 0;

  SweepVariable sweep = SweepVariable::rho;
  std::vector<double> grid;

  ValidationSettings sim;

  std::vector<double> ratio_k;
  std::vector<double> ratio_alpha;

  std::optional<std::string> output;
  std::uint64_t seed = 1;

  QosRequirement requirement(QosClass c) const;
  /// The selected class, or ConfigError if none was chosen.
  QosClass selected_class() const;
};

/// Parses `a:b:step` or a comma list; the result must be non-empty and
/// strictly increasing. Grid points are rounded to 12 significant digits so
/// that 0.85:0.95:0.05 yields exactly 0.9.
std::vector<double> parse_grid(std::string_view text);

/// Parses a comma-separated (optionally bracketed) list of reals.
std::vector<double> parse_list(std::string_view text);

ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec load_spec(const std::string& path);

/// Formats a real with 12 significant digits, as used in every CSV.
std::string format_number(double x);

// ---------------------------------------------------------------------------
// Subcommands

/// Sizing for the selected class at spec.rho or spec.lambda.
SizingResult plan_sizing(const ExperimentSpec& spec);

/// key=value report: class, rho, n, n_lo, n_hi, then constants sorted by name.
/// MWT adds the Poisson, optimized and (if requested) Lévy upper bounds.
void write_plan_report(const ExperimentSpec& spec, std::ostream& out);
nlohmann::json plan_record(const ExperimentSpec& spec);

/// Columns: sweep,value,class,n,n_lo,n_hi,rho,rho_lo,rho_hi,lambda,additional,
/// additional_lo,psi_L,psi_U,L,U,tau,gamma
void write_curve(const ExperimentSpec& spec, std::ostream& out);

/// Columns: class,bound,rho,n,lambda,predicted,simulated,ci_halfwidth,censored,
/// ratio,wait_probability,time_average,measured_jobs
/// A simulated zero is written as 1/measured_jobs with censored=1.
void write_validation(const ExperimentSpec& spec, std::ostream& out);

/// Columns: k,alpha,r1,r2,r. r2 and r are filled only when a service model
/// was configured and k equals its branch count.
void write_ratio_table(const ExperimentSpec& spec, std::ostream& out);

}  // namespace hwqos
