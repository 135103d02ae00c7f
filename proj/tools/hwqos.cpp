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

// hwqos: capacity plans, sizing curves, simulation checks and ratio tables.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config or usage error,
// 3 model invariant violated, 4 simulation error.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hwqos/errors.hpp"
#include "hwqos/experiments.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitSimulation = 4;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string qos_class;
  std::string sweep;
  std::string grid;
  std::optional<double> rho;
  std::optional<double> lambda;
  std::string json;
  std::optional<std::size_t> jobs;
  std::optional<unsigned> threads;
  std::optional<std::size_t> levy_samples;
  std::string ratio_k;
  std::string ratio_alpha;
};

hwqos::ExperimentSpec build_spec(const Overrides& o) {
  hwqos::ExperimentSpec spec = o.config.empty() ? hwqos::ExperimentSpec{} : hwqos::load_spec(o.config);
  if (o.seed) spec.seed = *o.seed;
  if (!o.qos_class.empty()) {
    spec.qos_class = hwqos::parse_qos_class(o.qos_class);
    if (!spec.qos_class) throw hwqos::ConfigError("--class: unknown class '" + o.qos_class + "'");
  }
  if (!o.sweep.empty()) {
    if (o.sweep == "rho") {
      spec.sweep = hwqos::SweepVariable::rho;
    } else if (o.sweep == "lambda") {
      spec.sweep = hwqos::SweepVariable::lambda;
    } else if (o.sweep == "n") {
      spec.sweep = hwqos::SweepVariable::n;
    } else {
      throw hwqos::ConfigError("--sweep: expected rho, lambda or n");
    }
  }
  if (!o.grid.empty()) spec.grid = hwqos::parse_grid(o.grid);
  if (o.rho) {
    spec.rho = o.rho;
    spec.lambda.reset();
  }
  if (o.lambda) {
    spec.lambda = o.lambda;
    if (!o.rho) spec.rho.reset();
  }
  if (o.jobs) spec.sim.measured_jobs = *o.jobs;
  if (o.threads) spec.sim.threads = *o.threads;
  if (o.levy_samples) spec.levy_samples = *o.levy_samples;
  if (!o.ratio_k.empty()) spec.ratio_k = hwqos::parse_grid(o.ratio_k);
  if (!o.ratio_alpha.empty()) spec.ratio_alpha = hwqos::parse_grid(o.ratio_alpha);
  if (!o.out.empty()) spec.output = o.out;
  spec.sim.seed = spec.seed;
  return spec;
}

// Buffers the whole output so a failing run leaves no partial file behind.
void emit(const hwqos::ExperimentSpec& spec, const std::function<void(std::ostream&)>& writer) {
  std::ostringstream buffer;
  writer(buffer);
  if (!spec.output || *spec.output == "-") {
    std::cout << buffer.str();
    return;
  }
  std::ofstream file(*spec.output, std::ios::binary);
  if (!file) throw hwqos::ConfigError("cannot write '" + *spec.output + "'");
  file << buffer.str();
  if (!file) throw hwqos::ConfigError("write failed for '" + *spec.output + "'");
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI experiment file");
  cmd->add_option("--out", o.out, "output path ('-' for stdout)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--class", o.qos_class, "QoS class: zwt, mwt, bwt or pwt");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-traffic capacity planning for GI/H/n clouds"};
  app.require_subcommand(1);
  Overrides o;

  CLI::App* plan = app.add_subcommand("plan", "machine count for one class at a given rho or lambda");
  add_common(plan, o);
  plan->add_option("--rho", o.rho, "target traffic intensity");
  plan->add_option("--lambda", o.lambda, "arrival rate");
  plan->add_option("--json", o.json, "also write a JSON record to this path");
  plan->add_option("--levy-samples", o.levy_samples, "Monte Carlo samples for the Levy bound (MWT, Poisson)");

  CLI::App* curve = app.add_subcommand("curve", "sizing curve over a rho, lambda or n grid");
  add_common(curve, o);
  curve->add_option("--sweep", o.sweep, "rho, lambda or n");
  curve->add_option("--grid", o.grid, "start:stop:step or comma list");

  CLI::App* validate = app.add_subcommand("validate", "simulate sized systems against their targets");
  add_common(validate, o);
  validate->add_option("--grid", o.grid, "rho grid");
  validate->add_option("--jobs", o.jobs, "measured jobs per grid point");
  validate->add_option("--threads", o.threads, "worker threads (0 = all cores)");

  CLI::App* ratio = app.add_subcommand("ratio", "tightness ratio table");
  add_common(ratio, o);
  ratio->add_option("--k", o.ratio_k, "branch-count grid");
  ratio->add_option("--alpha", o.ratio_alpha, "alpha grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const hwqos::ExperimentSpec spec = build_spec(o);
    if (plan->parsed()) {
      emit(spec, [&](std::ostream& out) { hwqos::write_plan_report(spec, out); });
      if (!o.json.empty()) {
        std::ofstream file(o.json, std::ios::binary);
        if (!file) throw hwqos::ConfigError("cannot write '" + o.json + "'");
        file << hwqos::plan_record(spec).dump(2) << '\n';
      }
    } else if (curve->parsed()) {
      emit(spec, [&](std::ostream& out) { hwqos::write_curve(spec, out); });
    } else if (validate->parsed()) {
      emit(spec, [&](std::ostream& out) { hwqos::write_validation(spec, out); });
    } else if (ratio->parsed()) {
      emit(spec, [&](std::ostream& out) { hwqos::write_ratio_table(spec, out); });
    }
  } catch (const hwqos::ConfigError& e) {
    std::cerr << "hwqos: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hwqos::InvalidArgument& e) {
    std::cerr << "hwqos: invalid model: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const hwqos::SimulationError& e) {
    std::cerr << "hwqos: simulation error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const std::exception& e) {
    std::cerr << "hwqos: " << e.what() << '\n';
    return kExitOther;
  }
  return 0;
}
