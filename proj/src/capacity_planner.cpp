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

#include "hwqos/capacity_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hwqos/errors.hpp"
#include "hwqos/kernels.hpp"

namespace hwqos {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

void require_cv(double c) { require(c >= 0.0 && std::isfinite(c), "arrival cv c must be finite and >= 0"); }

void require_open_unit(double x, const char* name) {
  require(x > 0.0 && x < 1.0, std::string(name) + " must lie in (0, 1)");
}

// sqrt(P_i / mu_i) for every branch.
std::vector<double> branch_scales(const HyperExpService& svc) {
  std::vector<double> s;
  s.reserve(svc.size());
  for (const Branch& b : svc.branches()) s.push_back(std::sqrt(b.weight / b.rate));
  return s;
}

// 1 + (c^2 - 1) P_i / 2: the split-stream factor (1 + c_i^2) / 2.
double split_factor(double c, double weight) { return 1.0 + 0.5 * (c * c - 1.0) * weight; }

// 1 - (1 - alpha)^(1/k) without cancellation for small alpha.
double independent_share(double alpha, std::size_t k) {
  return -std::expm1(std::log1p(-alpha) / static_cast<double>(k));
}

double zwt_count_value(double k1, double rho) { return std::pow(1.0 - rho, -1.0 / k1); }
double mwt_count_value(double bound, double rho) {
  const double x = bound / (1.0 - rho);
  return x * x;
}
double bwt_count_value(double tau, double p, double rho) {
  return std::pow(tau / (1.0 - rho), 1.0 / (1.0 - p));
}
double pwt_count_value(double gamma, double rho) { return gamma / (1.0 - rho); }

double at(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw InvalidArgument("sizing result lacks constant '" + key + "'");
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

QosClass class_of(const QosRequirement& qos) noexcept {
  return std::visit(Overloaded{[](const Zwt&) { return QosClass::zwt; },
                               [](const Mwt&) { return QosClass::mwt; },
                               [](const Bwt&) { return QosClass::bwt; },
                               [](const Pwt&) { return QosClass::pwt; }},
                    qos);
}

std::string_view to_string(QosClass c) noexcept {
  switch (c) {
    case QosClass::zwt:
      return "zwt";
    case QosClass::mwt:
      return "mwt";
    case QosClass::bwt:
      return "bwt";
    case QosClass::pwt:
      return "pwt";
  }
  return "unknown";
}

std::optional<QosClass> parse_qos_class(std::string_view name) noexcept {
  if (name == "zwt" || name == "ZWT") return QosClass::zwt;
  if (name == "mwt" || name == "MWT") return QosClass::mwt;
  if (name == "bwt" || name == "BWT") return QosClass::bwt;
  if (name == "pwt" || name == "PWT") return QosClass::pwt;
  return std::nullopt;
}

void validate(const QosRequirement& qos) {
  std::visit(Overloaded{
                 [](const Zwt& q) {
                   require(q.decay > 0.0 && q.decay < 0.5, "zwt: decay exponent k1 must lie in (0, 1/2)");
                 },
                 [](const Mwt& q) { require(q.alpha > 0.0 && q.alpha < 1.0, "mwt: alpha must lie in (0, 1)"); },
                 [](const Bwt& q) {
                   require(q.t1 > 0.0 && std::isfinite(q.t1), "bwt: t1 must be positive");
                   require(q.tail_exponent > 0.0 && q.tail_exponent < 0.5,
                           "bwt: tail exponent p must lie in (0, 1/2)");
                 },
                 [](const Pwt& q) {
                   require(q.t2 > 0.0 && std::isfinite(q.t2), "pwt: t2 must be positive");
                   require(q.delta > 0.0 && q.delta < 1.0, "pwt: delta must lie in (0, 1)");
                 }},
             qos);
}

// ---------------------------------------------------------------------------
// MWT

MwtBounds mwt_bounds(const HyperExpService& svc, double c, double alpha) {
  require_cv(c);
  require_open_unit(alpha, "mwt: alpha");
  const std::size_t k = svc.size();
  const std::vector<double> s = branch_scales(svc);
  const double sqrt_mu = std::sqrt(svc.rate());

  MwtBounds b;
  b.psi_lower = hw_solve_psi(alpha);
  b.psi_upper = hw_solve_psi(alpha / static_cast<double>(k));
  b.beta_lower.resize(k);
  b.beta_upper.resize(k);

  double sum_upper = 0.0;
  double max_lower = -1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double f = split_factor(c, svc.branches()[i].weight);
    b.beta_upper[i] = f * b.psi_upper.psi;
    b.beta_lower[i] = f * b.psi_lower.psi;
    sum_upper += b.beta_upper[i] * s[i];
    const double term = b.beta_lower[i] * s[i];
    if (term > max_lower) {
      max_lower = term;
      b.argmax = i;
    }
  }
  b.upper = sum_upper * sqrt_mu;
  b.lower = max_lower * sqrt_mu;
  return b;
}

double mwt_upper_poisson(const HyperExpService& svc, double alpha) {
  require_open_unit(alpha, "mwt: alpha");
  const std::vector<double> s = branch_scales(svc);
  const double psi = hw_solve_psi(independent_share(alpha, svc.size())).psi;
  return std::accumulate(s.begin(), s.end(), 0.0) * std::sqrt(svc.rate()) * psi;
}

double allocation_objective(const HyperExpService& svc, double c, std::span<const double> alphas) {
  require_cv(c);
  require(alphas.size() == svc.size(), "allocation: one probability per branch is required");
  double sum = 0.0;
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    const Branch& b = svc.branches()[j];
    sum += split_factor(c, b.weight) * hw_solve_psi(alphas[j]).psi * std::sqrt(b.weight / b.rate);
  }
  return sum * std::sqrt(svc.rate());
}

AllocationBound mwt_upper_optimized(const HyperExpService& svc, double c, double alpha,
                                    const OptimizerOptions& options) {
  require_cv(c);
  require_open_unit(alpha, "mwt: alpha");
  const std::size_t k = svc.size();
  const double sqrt_mu = std::sqrt(svc.rate());

  std::vector<double> w(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Branch& b = svc.branches()[j];
    w[j] = split_factor(c, b.weight) * std::sqrt(b.weight / b.rate) * sqrt_mu;
  }

  AllocationBound out;
  out.alphas.assign(k, alpha / static_cast<double>(k));
  std::vector<double> psi(k, hw_solve_psi(alpha / static_cast<double>(k)).psi);
  auto total = [&] {
    double v = 0.0;
    for (std::size_t j = 0; j < k; ++j) v += w[j] * psi[j];
    return v;
  };
  out.value = total();
  if (k == 1) return out;

  // Golden-section search of x in (0, s) for w_i psi(x) + w_j psi(s - x).
  // Both terms are convex and decreasing in their argument, so the pair
  // objective is unimodal.
  constexpr double kInvPhi = 0.6180339887498949;
  auto pair_cost = [&](std::size_t i, std::size_t j, double x, double s) {
    return w[i] * hw_solve_psi(x).psi + w[j] * hw_solve_psi(s - x).psi;
  };

  out.converged = false;
  for (out.sweeps = 1; out.sweeps <= options.max_sweeps; ++out.sweeps) {
    const double before = out.value;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double s = out.alphas[i] + out.alphas[j];
        double a = s * 1e-12;
        double b = s - a;
        double x1 = b - kInvPhi * (b - a);
        double x2 = a + kInvPhi * (b - a);
        double f1 = pair_cost(i, j, x1, s);
        double f2 = pair_cost(i, j, x2, s);
        for (int it = 0; it < 200 && (b - a) > 1e-13 * s; ++it) {
          if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = pair_cost(i, j, x1, s);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = pair_cost(i, j, x2, s);
          }
        }
        const double x = (f1 <= f2) ? x1 : x2;
        const double current = w[i] * psi[i] + w[j] * psi[j];
        const double candidate = std::min(f1, f2);
        if (candidate < current) {
          out.alphas[i] = x;
          out.alphas[j] = s - x;
          psi[i] = hw_solve_psi(x).psi;
          psi[j] = hw_solve_psi(s - x).psi;
        }
      }
    }
    out.value = total();
    if (before - out.value < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.sweeps = std::min(out.sweeps, options.max_sweeps);
  return out;
}

// ---------------------------------------------------------------------------
// Normalized queue density

NormalizedQueueDensity::NormalizedQueueDensity(double alpha, double beta)
    : alpha_(alpha), beta_(beta), phi_beta_(0.0) {
  require(alpha > 0.0 && alpha <= 1.0, "normalized queue density: alpha must lie in (0, 1]");
  require(beta > 0.0 && std::isfinite(beta), "normalized queue density: beta must be positive");
  phi_beta_ = normal_cdf(beta);
}

double NormalizedQueueDensity::pdf(double x) const noexcept {
  if (x > 0.0) return alpha_ * beta_ * std::exp(-beta_ * x);
  if (x < 0.0) return (1.0 - alpha_) * normal_pdf(x + beta_) / phi_beta_;
  return 0.0;
}

double NormalizedQueueDensity::transform(double u, double v) const noexcept {
  if (u < alpha_) return -std::log(v) / beta_;
  // Inverse CDF of N(-beta, 1) truncated to (-inf, 0).
  return -beta_ + normal_quantile_fast(v * phi_beta_);
}

double NormalizedQueueDensity::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const double v = rng.uniform();
  return transform(u, v);
}

// ---------------------------------------------------------------------------
// Levy-constrained bound

namespace {

// Monte Carlo evaluator of P(sum_j w_j Q_j >= 0) on a fixed set of uniforms.
class TailEstimator {
 public:
  TailEstimator(std::vector<double> weights, std::size_t samples, RngStream& rng)
      : w_(std::move(weights)), n_(samples), u_(w_.size() * n_), v_(w_.size() * n_),
        columns_(w_.size() * n_), sum_(n_) {
    for (std::size_t j = 0; j < w_.size(); ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        u_[j * n_ + i] = rng.uniform();
        v_[j * n_ + i] = rng.uniform();
      }
    }
  }

  struct Estimate {
    double p = 0.0;
    double se = 0.0;
  };

  /// Full evaluation; leaves columns and the weighted sum cached for
  /// subsequent single-coordinate updates.
  Estimate evaluate(std::span<const double> alphas) {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    for (std::size_t j = 0; j < w_.size(); ++j) {
      fill_column(j, alphas[j], column(j));
      kernels::scaled_add(sum_, w_[j], column(j));
    }
    ++evaluations_;
    return estimate();
  }

  /// Tail with coordinate j moved to alpha_j; the cache is updated only if
  /// `commit` is set.
  Estimate evaluate_coordinate(std::size_t j, double alpha_j, bool commit) {
    scratch_.resize(n_);
    fill_column(j, alpha_j, scratch_);
    trial_ = sum_;
    kernels::scaled_difference_add(trial_, w_[j], scratch_, column(j));
    ++evaluations_;
    const std::size_t hits = kernels::count_at_least(trial_, 0.0);
    if (commit) {
      std::copy(scratch_.begin(), scratch_.end(), column(j).begin());
      sum_.swap(trial_);
    }
    return make_estimate(hits);
  }

  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  std::span<double> column(std::size_t j) { return {columns_.data() + j * n_, n_}; }

  void fill_column(std::size_t j, double alpha_j, std::span<double> out) const {
    const NormalizedQueueDensity density(alpha_j, hw_solve_psi(alpha_j).psi);
    const double* u = u_.data() + j * n_;
    const double* v = v_.data() + j * n_;
    for (std::size_t i = 0; i < n_; ++i) out[i] = density.transform(u[i], v[i]);
  }

  Estimate estimate() const { return make_estimate(kernels::count_at_least(sum_, 0.0)); }

  Estimate make_estimate(std::size_t hits) const {
    const double n = static_cast<double>(n_);
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
  }

  std::vector<double> w_;
  std::size_t n_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<double> columns_;
  std::vector<double> sum_;
  std::vector<double> trial_;
  std::vector<double> scratch_;
  std::size_t evaluations_ = 0;
};

constexpr double kMaxShare = 1.0 - 1e-9;
constexpr int kBisectionSteps = 18;

}  // namespace

LevyBound mwt_upper_levy(const HyperExpService& svc, double alpha, std::size_t samples, RngStream& rng) {
  require_open_unit(alpha, "mwt: alpha");
  require(samples >= kMinLevySamples, "levy bound: at least 1e5 Monte Carlo samples are required");
  const std::size_t k = svc.size();

  LevyBound out;
  if (k == 1) {
    // P(Q_1 >= 0) = alpha_1 exactly, so the constraint is tight at alpha.
    out.alphas = {alpha};
    out.value = allocation_objective(svc, 1.0, out.alphas);
    out.tail_estimate = alpha;
    return out;
  }

  TailEstimator est(branch_scales(svc), samples, rng);
  auto certified = [&](const TailEstimator::Estimate& e) { return e.p + 3.0 * e.se <= alpha; };

  const double poisson_share = independent_share(alpha, k);
  const std::vector<double> poisson_point(k, poisson_share);
  const double poisson_value = allocation_objective(svc, 1.0, poisson_point);

  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  TailEstimator::Estimate best_est;

  auto consider = [&](const std::vector<double>& alphas, const TailEstimator::Estimate& e) {
    const double v = allocation_objective(svc, 1.0, alphas);
    if (v < best_value) {
      best_value = v;
      best = alphas;
      best_est = e;
    }
  };

  // Largest certified scale t for the allocation t * shape.
  auto scale_search = [&](const std::vector<double>& shape, double t_start) {
    const double t_cap = kMaxShare / *std::max_element(shape.begin(), shape.end());
    auto alloc = [&](double t) {
      std::vector<double> a(k);
      for (std::size_t j = 0; j < k; ++j) a[j] = std::min(t, t_cap) * shape[j];
      return a;
    };
    double t = std::min(t_start, t_cap);
    auto e = est.evaluate(alloc(t));
    double lo = 0.0;
    double hi = 0.0;
    TailEstimator::Estimate lo_est;
    if (certified(e)) {
      lo = t;
      lo_est = e;
      hi = t;
      while (hi < t_cap) {
        hi = std::min(hi * 1.5, t_cap);
        auto eh = est.evaluate(alloc(hi));
        if (!certified(eh)) break;
        lo = hi;
        lo_est = eh;
      }
      if (lo >= t_cap) {
        consider(alloc(lo), lo_est);
        return;
      }
    } else {
      hi = t;
      lo = t;
      bool found = false;
      for (int step = 0; step < 40; ++step) {
        lo *= 0.5;
        auto el = est.evaluate(alloc(lo));
        if (certified(el)) {
          lo_est = el;
          found = true;
          break;
        }
        hi = lo;
      }
      if (!found) return;
    }
    for (int step = 0; step < kBisectionSteps; ++step) {
      const double mid = std::sqrt(lo * hi);
      auto em = est.evaluate(alloc(mid));
      if (certified(em)) {
        lo = mid;
        lo_est = em;
      } else {
        hi = mid;
      }
    }
    consider(alloc(lo), lo_est);
  };

  // Candidate shapes: equal shares and blends toward the allocation that is
  // optimal under the union-bound constraint.
  const std::vector<double> equal(k, 1.0 / static_cast<double>(k));
  std::vector<double> tilted = mwt_upper_optimized(svc, 1.0, alpha).alphas;
  for (double& a : tilted) a /= alpha;

  const auto poisson_est = est.evaluate(poisson_point);
  if (certified(poisson_est)) consider(poisson_point, poisson_est);

  for (double theta : {0.0, 0.5, 1.0}) {
    std::vector<double> shape(k);
    for (std::size_t j = 0; j < k; ++j) shape[j] = (1.0 - theta) * equal[j] + theta * tilted[j];
    scale_search(shape, poisson_share * static_cast<double>(k));
  }

  // One pass of single-coordinate increases from the best point.
  if (!best.empty()) {
    std::vector<double> point = best;
    est.evaluate(point);
    for (std::size_t j = 0; j < k; ++j) {
      double lo = point[j];
      double hi = std::min(kMaxShare, lo * 2.0);
      TailEstimator::Estimate lo_est = best_est;
      bool moved = false;
      for (int step = 0; step < 10; ++step) {
        const double mid = 0.5 * (lo + hi);
        auto e = est.evaluate_coordinate(j, mid, false);
        if (certified(e)) {
          lo = mid;
          lo_est = e;
          moved = true;
        } else {
          hi = mid;
        }
      }
      if (moved) {
        est.evaluate_coordinate(j, lo, true);
        point[j] = lo;
        consider(point, lo_est);
      }
    }
  }

  out.evaluations = est.evaluations();
  if (best.empty() || best_value > poisson_value) {
    // The independent-share point is feasible analytically: the weighted sum
    // can only be >= 0 if some Q_j >= 0.
    out.value = poisson_value;
    out.alphas = poisson_point;
    out.tail_estimate = poisson_est.p;
    out.tail_stderr = poisson_est.se;
    out.fallback = true;
    return out;
  }
  out.value = best_value;
  out.alphas = best;
  out.tail_estimate = best_est.p;
  out.tail_stderr = best_est.se;
  return out;
}

// ---------------------------------------------------------------------------
// BWT / PWT

double bwt_tau(const HyperExpService& svc, double c, double t1) {
  require_cv(c);
  require(t1 > 0.0 && std::isfinite(t1), "bwt: t1 must be positive");
  return (svc.scv() + c * c) / (2.0 * svc.rate() * t1);
}

double pwt_gamma(const HyperExpService& svc, double c, double t2, double delta) {
  require_cv(c);
  require(t2 > 0.0 && std::isfinite(t2), "pwt: t2 must be positive");
  require_open_unit(delta, "pwt: delta");
  return -(svc.scv() + c * c) * std::log(delta) / (2.0 * svc.rate() * t2);
}

double kingman_wait_tail(const HyperExpService& svc, double c, double rho, double n, double t) {
  require_cv(c);
  require_open_unit(rho, "traffic intensity rho");
  require(n >= 1.0, "kingman tail: n must be >= 1");
  require(t >= 0.0, "kingman tail: t must be >= 0");
  return std::exp(-2.0 * svc.rate() * (1.0 - rho) * n * t / (svc.scv() + c * c));
}

// ---------------------------------------------------------------------------
// Machine counts

std::int64_t ceil_count(double x) {
  if (!std::isfinite(x) || x > 9.0e18) throw InvalidArgument("machine count is not representable");
  const double r = std::round(x);
  const double v = (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) ? r : std::ceil(x);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(v));
}

SizingResult machines_for(const QosRequirement& qos, const HyperExpService& svc, double c, double rho) {
  validate(qos);
  require_cv(c);
  require_open_unit(rho, "traffic intensity rho");

  SizingResult r;
  r.qos = class_of(qos);
  r.rho = rho;
  r.constants["mu"] = svc.rate();
  r.constants["sigma2"] = svc.variance();
  r.constants["c"] = c;

  std::visit(Overloaded{
                 [&](const Zwt& q) {
                   r.constants["k1"] = q.decay;
                   r.n = ceil_count(zwt_count_value(q.decay, rho));
                 },
                 [&](const Mwt& q) {
                   const MwtBounds b = mwt_bounds(svc, c, q.alpha);
                   r.constants["alpha"] = q.alpha;
                   r.constants["psi_L"] = b.psi_lower.psi;
                   r.constants["psi_U"] = b.psi_upper.psi;
                   r.constants["L"] = b.lower;
                   r.constants["U"] = b.upper;
                   r.n_lo = ceil_count(mwt_count_value(b.lower, rho));
                   r.n_hi = ceil_count(mwt_count_value(b.upper, rho));
                   r.n = r.n_hi;
                 },
                 [&](const Bwt& q) {
                   const double tau = bwt_tau(svc, c, q.t1);
                   r.constants["t1"] = q.t1;
                   r.constants["p"] = q.tail_exponent;
                   r.constants["tau"] = tau;
                   r.n = ceil_count(bwt_count_value(tau, q.tail_exponent, rho));
                 },
                 [&](const Pwt& q) {
                   const double gamma = pwt_gamma(svc, c, q.t2, q.delta);
                   r.constants["t2"] = q.t2;
                   r.constants["delta"] = q.delta;
                   r.constants["gamma"] = gamma;
                   r.n = ceil_count(pwt_count_value(gamma, rho));
                 }},
             qos);
  if (r.qos != QosClass::mwt) {
    r.n_lo = r.n;
    r.n_hi = r.n;
  }
  return r;
}

SizingResult recompute_machines(const SizingResult& sizing) {
  SizingResult r = sizing;
  const double rho = sizing.rho;
  const auto& k = sizing.constants;
  switch (sizing.qos) {
    case QosClass::zwt:
      r.n = r.n_lo = r.n_hi = ceil_count(zwt_count_value(at(k, "k1"), rho));
      break;
    case QosClass::mwt:
      r.n_lo = ceil_count(mwt_count_value(at(k, "L"), rho));
      r.n_hi = ceil_count(mwt_count_value(at(k, "U"), rho));
      r.n = r.n_hi;
      break;
    case QosClass::bwt:
      r.n = r.n_lo = r.n_hi = ceil_count(bwt_count_value(at(k, "tau"), at(k, "p"), rho));
      break;
    case QosClass::pwt:
      r.n = r.n_lo = r.n_hi = ceil_count(pwt_count_value(at(k, "gamma"), rho));
      break;
  }
  return r;
}

namespace {

// Smallest integer n > lambda / mu with required(lambda / (n mu)) <= n, where
// required() is the unrounded count for a given rho. required() is
// increasing in rho and rho decreases in n, so the predicate is monotone.
template <class Required>
std::int64_t smallest_sufficient(double offered, Required required) {
  auto ok = [&](std::int64_t n) {
    const double rho = offered / static_cast<double>(n);
    return rho < 1.0 && ceil_count(required(rho)) <= n;
  };
  std::int64_t lo = static_cast<std::int64_t>(std::floor(offered));  // never sufficient
  std::int64_t step = 1;
  std::int64_t hi = lo + step;
  while (!ok(hi)) {
    lo = hi;
    step *= 2;
    hi = lo + step;
    if (step > (std::int64_t{1} << 60)) throw InvalidArgument("machine count search diverged");
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::max<std::int64_t>(1, hi);
}

}  // namespace

SizingResult machines_for_rate(const QosRequirement& qos, const HyperExpService& svc, double c,
                               double lambda) {
  validate(qos);
  require_cv(c);
  require(lambda > 0.0 && std::isfinite(lambda), "arrival rate lambda must be positive");
  const double offered = lambda / svc.rate();

  // Constants do not depend on rho; size once at an arbitrary rho to get them.
  SizingResult r = machines_for(qos, svc, c, 0.5);
  const auto& k = r.constants;
  switch (r.qos) {
    case QosClass::zwt: {
      const double k1 = at(k, "k1");
      r.n = r.n_lo = r.n_hi = smallest_sufficient(offered, [&](double rho) { return zwt_count_value(k1, rho); });
      break;
    }
    case QosClass::mwt: {
      const double lower = at(k, "L");
      const double upper = at(k, "U");
      r.n_lo = smallest_sufficient(offered, [&](double rho) { return mwt_count_value(lower, rho); });
      r.n_hi = smallest_sufficient(offered, [&](double rho) { return mwt_count_value(upper, rho); });
      r.n = r.n_hi;
      break;
    }
    case QosClass::bwt: {
      const double tau = at(k, "tau");
      const double p = at(k, "p");
      r.n = r.n_lo = r.n_hi =
          smallest_sufficient(offered, [&](double rho) { return bwt_count_value(tau, p, rho); });
      break;
    }
    case QosClass::pwt: {
      const double gamma = at(k, "gamma");
      r.n = r.n_lo = r.n_hi = smallest_sufficient(offered, [&](double rho) { return pwt_count_value(gamma, rho); });
      break;
    }
  }
  r.rho = offered / static_cast<double>(r.n);
  r.constants["lambda"] = lambda;
  return r;
}

MaxRho max_rho_for(const QosRequirement& qos, const HyperExpService& svc, double c, double n) {
  validate(qos);
  require_cv(c);
  require(n >= 1.0 && std::isfinite(n), "machine count n must be >= 1");
  auto clamp = [](double rho) { return std::max(0.0, rho); };
  MaxRho m;
  std::visit(Overloaded{
                 [&](const Zwt& q) { m.rho = m.rho_lo = m.rho_hi = clamp(1.0 - std::pow(n, -q.decay)); },
                 [&](const Mwt& q) {
                   const MwtBounds b = mwt_bounds(svc, c, q.alpha);
                   m.rho_lo = clamp(1.0 - b.upper / std::sqrt(n));
                   m.rho_hi = clamp(1.0 - b.lower / std::sqrt(n));
                   m.rho = m.rho_lo;
                 },
                 [&](const Bwt& q) {
                   const double tau = bwt_tau(svc, c, q.t1);
                   m.rho = m.rho_lo = m.rho_hi = clamp(1.0 - tau * std::pow(n, q.tail_exponent - 1.0));
                 },
                 [&](const Pwt& q) {
                   const double gamma = pwt_gamma(svc, c, q.t2, q.delta);
                   m.rho = m.rho_lo = m.rho_hi = clamp(1.0 - gamma / n);
                 }},
             qos);
  return m;
}

// ---------------------------------------------------------------------------
// Tightness

double ratio_r1(std::size_t k, double alpha) {
  require(k >= 1, "ratio: k must be >= 1");
  require_open_unit(alpha, "ratio: alpha");
  if (k == 1) return 1.0;
  return hw_solve_psi(alpha / static_cast<double>(k)).psi / hw_solve_psi(alpha).psi;
}

TightnessRatio tightness_ratio(const HyperExpService& svc, double c, double alpha) {
  require_cv(c);
  TightnessRatio t;
  t.r1 = ratio_r1(svc.size(), alpha);
  const std::vector<double> s = branch_scales(svc);
  double sum = 0.0;
  double mx = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double term = split_factor(c, svc.branches()[i].weight) * s[i];
    sum += term;
    mx = std::max(mx, term);
  }
  t.r2 = sum / mx;
  t.r = t.r1 * t.r2;
  return t;
}

}  // namespace hwqos
