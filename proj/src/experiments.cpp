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

#include "hwqos/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <map>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hwqos/errors.hpp"

namespace hwqos {

namespace {

namespace pt = boost::property_tree;

double parse_real(std::string_view text, std::string_view key) {
  std::string s(text);
  boost::algorithm::trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": not a number: '" + s + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view key) {
  const double v = parse_real(text, key);
  if (v < 0.0 || v != std::floor(v) || v > 1.8e19) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

double round12(double x) { return std::stod(format_number(x)); }

void require_increasing(const std::vector<double>& g, std::string_view what) {
  if (g.empty()) throw ConfigError(std::string(what) + " is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw ConfigError(std::string(what) + " must be strictly increasing");
  }
}

// Flattens the ini tree to dotted keys; top-level keys keep their name.
void flatten(const pt::ptree& tree, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& [key, child] : tree) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (child.empty()) {
      out.emplace_back(name, child.data());
    } else {
      flatten(child, name, out);
    }
  }
}

RenewalArrival make_arrival(const std::string& kind, double rate, unsigned stages, const std::vector<double>& mu,
                            const std::vector<double>& p) {
  if (kind == "poisson") return RenewalArrival::poisson(rate);
  if (kind == "erlang") return RenewalArrival::erlang(stages, rate);
  if (kind == "deterministic") return RenewalArrival::deterministic(rate);
  if (kind == "hyperexp") {
    if (mu.empty()) throw ConfigError("arrival.mu is required for hyperexp arrivals");
    return RenewalArrival::hyperexp(rate, HyperExpService::from_lists(mu, p.empty() && mu.size() == 1 ? std::vector<double>{1.0} : p));
  }
  throw ConfigError("arrival.kind: unknown kind '" + kind + "'");
}

std::string csv_count(std::int64_t n) { return std::to_string(n); }

}  // namespace

std::string_view to_string(SweepVariable v) noexcept {
  switch (v) {
    case SweepVariable::rho:
      return "rho";
    case SweepVariable::lambda:
      return "lambda";
    case SweepVariable::n:
      return "n";
  }
  return "unknown";
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

QosRequirement ExperimentSpec::requirement(QosClass c) const {
  switch (c) {
    case QosClass::zwt:
      return zwt;
    case QosClass::mwt:
      return mwt;
    case QosClass::bwt:
      return bwt;
    case QosClass::pwt:
      return pwt;
  }
  return mwt;
}

QosClass ExperimentSpec::selected_class() const {
  if (!qos_class) throw ConfigError("no QoS class selected (set qos.class or --class)");
  return *qos_class;
}

std::vector<double> parse_list(std::string_view text) {
  std::string s(text);
  boost::algorithm::trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unbalanced '[' in list '" + s + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item, "list"));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> g;
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_real(item, "grid"));
    if (parts.size() != 3) throw ConfigError("grid: expected start:stop:step");
    const double start = parts[0];
    const double stop = parts[1];
    const double step = parts[2];
    if (!(step > 0.0)) throw ConfigError("grid: step must be positive");
    if (stop < start) throw ConfigError("grid: stop is below start");
    const double count = std::floor((stop - start) / step + 1e-9);
    if (count > 1e6) throw ConfigError("grid: more than 10^6 points");
    for (std::size_t i = 0; i <= static_cast<std::size_t>(count); ++i) {
      g.push_back(round12(start + static_cast<double>(i) * step));
    }
  } else {
    g = parse_list(text);
  }
  require_increasing(g, "grid");
  return g;
}

ExperimentSpec parse_spec(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  std::vector<std::pair<std::string, std::string>> entries;
  flatten(tree, "", entries);

  ExperimentSpec spec;
  std::vector<double> svc_mu;
  std::vector<double> svc_p;
  std::string arrival_kind = "poisson";
  double arrival_rate = 1.0;
  unsigned stages = 2;
  std::vector<double> arrival_mu;
  std::vector<double> arrival_p;

  for (const auto& [key, raw] : entries) {
    std::string value = raw;
    boost::algorithm::trim(value);
    if (key == "seed") {
      spec.seed = parse_unsigned(value, key);
    } else if (key == "scenario") {
      spec.scenario = value;
    } else if (key == "service.mu") {
      svc_mu = parse_list(value);
    } else if (key == "service.p") {
      svc_p = parse_list(value);
    } else if (key == "arrival.kind") {
      arrival_kind = value;
    } else if (key == "arrival.rate") {
      arrival_rate = parse_real(value, key);
    } else if (key == "arrival.stages") {
      stages = static_cast<unsigned>(parse_unsigned(value, key));
    } else if (key == "arrival.mu") {
      arrival_mu = parse_list(value);
    } else if (key == "arrival.p") {
      arrival_p = parse_list(value);
    } else if (key == "qos.class") {
      spec.qos_class = parse_qos_class(value);
      if (!spec.qos_class) throw ConfigError("qos.class: unknown class '" + value + "'");
    } else if (key == "qos.decay") {
      spec.zwt.decay = parse_real(value, key);
    } else if (key == "qos.alpha") {
      spec.mwt.alpha = parse_real(value, key);
    } else if (key == "qos.t1") {
      spec.bwt.t1 = parse_real(value, key);
    } else if (key == "qos.p") {
      spec.bwt.tail_exponent = parse_real(value, key);
    } else if (key == "qos.t2") {
      spec.pwt.t2 = parse_real(value, key);
    } else if (key == "qos.delta") {
      spec.pwt.delta = parse_real(value, key);
    } else if (key == "plan.rho") {
      spec.rho = parse_real(value, key);
    } else if (key == "plan.lambda") {
      spec.lambda = parse_real(value, key);
    } else if (key == "plan.levy_samples") {
      spec.levy_samples = parse_unsigned(value, key);
    } else if (key == "sweep.variable") {
      if (value == "rho") {
        spec.sweep = SweepVariable::rho;
      } else if (value == "lambda") {
        spec.sweep = SweepVariable::lambda;
      } else if (value == "n") {
        spec.sweep = SweepVariable::n;
      } else {
        throw ConfigError("sweep.variable: expected rho, lambda or n");
      }
    } else if (key == "sweep.grid") {
      spec.grid = parse_grid(value);
    } else if (key == "sim.measured_jobs") {
      spec.sim.measured_jobs = parse_unsigned(value, key);
    } else if (key == "sim.batches") {
      spec.sim.batches = parse_unsigned(value, key);
    } else if (key == "sim.warmup_jobs") {
      spec.sim.warmup_jobs = parse_unsigned(value, key);
    } else if (key == "sim.threads") {
      spec.sim.threads = static_cast<unsigned>(parse_unsigned(value, key));
    } else if (key == "ratio.k") {
      spec.ratio_k = parse_grid(value);
    } else if (key == "ratio.alpha") {
      spec.ratio_alpha = parse_grid(value);
    } else if (key == "output.path") {
      spec.output = value;
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  try {
    if (!svc_mu.empty() || !svc_p.empty()) {
      if (svc_p.empty() && svc_mu.size() == 1) svc_p = {1.0};
      spec.service = HyperExpService::from_lists(svc_mu, svc_p);
      spec.service_given = true;
    }
    spec.arrival = make_arrival(arrival_kind, arrival_rate, stages, arrival_mu, arrival_p);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  for (double k : spec.ratio_k) {
    if (k < 1.0 || k != std::floor(k)) throw ConfigError("ratio.k: entries must be positive integers");
  }
  spec.sim.seed = spec.seed;
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_spec(in);
}

// ---------------------------------------------------------------------------
// plan

SizingResult plan_sizing(const ExperimentSpec& spec) {
  const QosRequirement qos = spec.requirement(spec.selected_class());
  const double c = spec.arrival.cv();
  if (spec.rho && spec.lambda) throw ConfigError("plan: give either rho or lambda, not both");
  if (spec.rho) return machines_for(qos, spec.service, c, *spec.rho);
  if (spec.lambda) return machines_for_rate(qos, spec.service, c, *spec.lambda);
  throw ConfigError("plan: rho or lambda is required");
}

namespace {

struct MwtExtras {
  double poisson = std::nan("");
  double optimized = std::nan("");
  std::optional<LevyBound> levy;
};

MwtExtras mwt_extras(const ExperimentSpec& spec) {
  MwtExtras e;
  const double c = spec.arrival.cv();
  e.optimized = mwt_upper_optimized(spec.service, c, spec.mwt.alpha).value;
  if (spec.arrival.kind() == ArrivalKind::poisson) {
    e.poisson = mwt_upper_poisson(spec.service, spec.mwt.alpha);
    if (spec.levy_samples > 0) {
      RngStream rng(spec.seed, 0);
      e.levy = mwt_upper_levy(spec.service, spec.mwt.alpha, spec.levy_samples, rng);
    }
  }
  return e;
}

}  // namespace

void write_plan_report(const ExperimentSpec& spec, std::ostream& out) {
  const SizingResult r = plan_sizing(spec);
  out << "class=" << to_string(r.qos) << '\n';
  out << "arrival=" << to_string(spec.arrival.kind()) << '\n';
  out << "k=" << spec.service.size() << '\n';
  out << "rho=" << format_number(r.rho) << '\n';
  out << "n=" << r.n << '\n';
  out << "n_lo=" << r.n_lo << '\n';
  out << "n_hi=" << r.n_hi << '\n';
  for (const auto& [name, value] : r.constants) out << name << '=' << format_number(value) << '\n';
  if (r.qos == QosClass::mwt) {
    const MwtExtras e = mwt_extras(spec);
    out << "U_optimized=" << format_number(e.optimized) << '\n';
    if (!std::isnan(e.poisson)) out << "U_poisson=" << format_number(e.poisson) << '\n';
    if (e.levy) {
      out << "U_levy=" << format_number(e.levy->value) << '\n';
      out << "U_levy_fallback=" << (e.levy->fallback ? 1 : 0) << '\n';
    }
  }
}

nlohmann::json plan_record(const ExperimentSpec& spec) {
  const SizingResult r = plan_sizing(spec);
  nlohmann::json j;
  j["scenario"] = spec.scenario;
  j["class"] = std::string(to_string(r.qos));
  j["arrival"] = std::string(to_string(spec.arrival.kind()));
  j["k"] = spec.service.size();
  j["rho"] = r.rho;
  j["n"] = r.n;
  j["n_lo"] = r.n_lo;
  j["n_hi"] = r.n_hi;
  j["constants"] = r.constants;
  if (r.qos == QosClass::mwt) {
    const MwtExtras e = mwt_extras(spec);
    j["U_optimized"] = e.optimized;
    if (!std::isnan(e.poisson)) j["U_poisson"] = e.poisson;
    if (e.levy) {
      j["U_levy"] = e.levy->value;
      j["U_levy_fallback"] = e.levy->fallback;
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// curve

void write_curve(const ExperimentSpec& spec, std::ostream& out) {
  require_increasing(spec.grid, "sweep.grid");
  std::vector<QosClass> classes;
  if (spec.qos_class) {
    classes = {*spec.qos_class};
  } else {
    classes = {QosClass::zwt, QosClass::mwt, QosClass::bwt, QosClass::pwt};
  }
  const double c = spec.arrival.cv();
  const double mu = spec.service.rate();

  out << "sweep,value,class,n,n_lo,n_hi,rho,rho_lo,rho_hi,lambda,additional,additional_lo,psi_L,psi_U,L,U,tau,gamma\n";
  for (double x : spec.grid) {
    for (QosClass cls : classes) {
      const QosRequirement qos = spec.requirement(cls);
      std::string n;
      std::string n_lo;
      std::string n_hi;
      double rho = 0.0;
      double rho_lo = 0.0;
      double rho_hi = 0.0;
      std::string lambda;
      std::string additional;
      std::string additional_lo;
      std::map<std::string, double> constants;

      if (spec.sweep == SweepVariable::n) {
        const MaxRho m = max_rho_for(qos, spec.service, c, x);
        rho = m.rho;
        rho_lo = m.rho_lo;
        rho_hi = m.rho_hi;
        n = n_lo = n_hi = format_number(x);
        lambda = format_number(rho * x * mu);
        constants = machines_for(qos, spec.service, c, 0.5).constants;
      } else {
        const SizingResult r = (spec.sweep == SweepVariable::rho) ? machines_for(qos, spec.service, c, x)
                                                                   : machines_for_rate(qos, spec.service, c, x);
        n = csv_count(r.n);
        n_lo = csv_count(r.n_lo);
        n_hi = csv_count(r.n_hi);
        constants = r.constants;
        if (spec.sweep == SweepVariable::rho) {
          rho = rho_lo = rho_hi = x;
          lambda = format_number(x * static_cast<double>(r.n) * mu);
        } else {
          const double offered = x / mu;
          rho = r.rho;
          rho_lo = offered / static_cast<double>(r.n_hi);
          rho_hi = offered / static_cast<double>(r.n_lo);
          lambda = format_number(x);
          const auto base = static_cast<std::int64_t>(std::ceil(offered - 1e-9 * offered));
          additional = csv_count(r.n - base);
          additional_lo = csv_count(r.n_lo - base);
        }
      }
      auto constant = [&](const char* name) {
        const auto it = constants.find(name);
        return it == constants.end() ? std::string() : format_number(it->second);
      };
      out << to_string(spec.sweep) << ',' << format_number(x) << ',' << to_string(cls) << ',' << n << ',' << n_lo
          << ',' << n_hi << ',' << format_number(rho) << ',' << format_number(rho_lo) << ',' << format_number(rho_hi)
          << ',' << lambda << ',' << additional << ',' << additional_lo << ',' << constant("psi_L") << ','
          << constant("psi_U") << ',' << constant("L") << ',' << constant("U") << ',' << constant("tau") << ','
          << constant("gamma") << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// validate

void write_validation(const ExperimentSpec& spec, std::ostream& out) {
  const QosClass cls = spec.selected_class();
  if (cls != QosClass::mwt && cls != QosClass::bwt) throw ConfigError("validate: class must be mwt or bwt");
  if (spec.sweep != SweepVariable::rho) throw ConfigError("validate: sweep variable must be rho");
  require_increasing(spec.grid, "sweep.grid");

  ValidationSettings settings = spec.sim;
  settings.seed = spec.seed;
  const std::vector<ValidationRow> rows =
      validate_class(spec.requirement(cls), spec.service, spec.arrival, spec.grid, settings);

  out << "class,bound,rho,n,lambda,predicted,simulated,ci_halfwidth,censored,ratio,wait_probability,time_average,"
         "measured_jobs\n";
  for (const ValidationRow& r : rows) {
    const bool censored = r.simulated.value == 0.0;
    const double simulated = censored ? 1.0 / static_cast<double>(r.measured_jobs) : r.simulated.value;
    out << to_string(r.qos) << ',' << r.bound << ',' << format_number(r.rho) << ',' << r.n << ','
        << format_number(r.lambda) << ',' << format_number(r.predicted) << ',' << format_number(simulated) << ','
        << format_number(r.simulated.half_width) << ',' << (censored ? 1 : 0) << ','
        << format_number(simulated / r.predicted) << ',' << format_number(r.wait_probability.value) << ','
        << format_number(r.busy_time_fraction.value) << ',' << r.measured_jobs << '\n';
  }
}

// ---------------------------------------------------------------------------
// ratio

void write_ratio_table(const ExperimentSpec& spec, std::ostream& out) {
  require_increasing(spec.ratio_k, "ratio.k");
  require_increasing(spec.ratio_alpha, "ratio.alpha");
  out << "k,alpha,r1,r2,r\n";
  for (double kd : spec.ratio_k) {
    const auto k = static_cast<std::size_t>(kd);
    for (double alpha : spec.ratio_alpha) {
      out << k << ',' << format_number(alpha) << ',' << format_number(ratio_r1(k, alpha)) << ',';
      if (spec.service_given && k == spec.service.size()) {
        const TightnessRatio t = tightness_ratio(spec.service, spec.arrival.cv(), alpha);
        out << format_number(t.r2) << ',' << format_number(t.r);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace hwqos
