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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hwqos/capacity_planner.hpp"
#include "hwqos/errors.hpp"

using namespace hwqos;

namespace {

HyperExpService reference_model() {
  return HyperExpService::from_lists(std::vector{1.0, 8.0, 20.0}, std::vector{0.6, 0.25, 0.15});
}

HyperExpService random_model(RngStream& rng, std::size_t k) {
  std::vector<double> rates;
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    rates.push_back(std::exp(rng.uniform() * 6.0 - 3.0));
    weights.push_back(0.05 + rng.uniform());
    total += weights.back();
  }
  for (double& w : weights) w /= total;
  return HyperExpService::from_lists(rates, weights);
}

// Staffing constant of the split system, written out from the definition.
double objective_oracle(const HyperExpService& svc, double c, const std::vector<double>& alphas) {
  double s = 0.0;
  for (std::size_t j = 0; j < svc.size(); ++j) {
    const Branch& b = svc.branches()[j];
    s += (1.0 + (c * c - 1.0) * b.weight / 2.0) * hw_solve_psi(alphas[j]).psi * std::sqrt(b.weight / b.rate);
  }
  return s * std::sqrt(svc.rate());
}

// Exhaustive search over the simplex sum alpha_j = alpha with step alpha/200.
double grid_minimum(const HyperExpService& svc, double c, double alpha) {
  const int steps = 200;
  const double h = alpha / steps;
  double best = INFINITY;
  if (svc.size() == 2) {
    for (int i = 1; i < steps; ++i) best = std::min(best, objective_oracle(svc, c, {i * h, alpha - i * h}));
  } else {
    for (int i = 1; i < steps; ++i) {
      for (int j = 1; i + j < steps; ++j) {
        best = std::min(best, objective_oracle(svc, c, {i * h, j * h, alpha - (i + j) * h}));
      }
    }
  }
  return best;
}

double simpson(const auto& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("qos validation and names") {
  CHECK_NOTHROW(validate(Zwt{0.25}));
  CHECK_THROWS_AS(validate(Zwt{0.5}), InvalidArgument);
  CHECK_THROWS_AS(validate(Zwt{0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(Mwt{0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(Mwt{1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(Bwt{0.0, 0.25}), InvalidArgument);
  CHECK_THROWS_AS(validate(Bwt{0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(validate(Pwt{0.0, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(validate(Pwt{1.0, 1.0}), InvalidArgument);
  for (QosClass c : {QosClass::zwt, QosClass::mwt, QosClass::bwt, QosClass::pwt}) {
    CHECK(parse_qos_class(to_string(c)) == c);
  }
  CHECK_FALSE(parse_qos_class("xyz").has_value());
  CHECK(class_of(Bwt{}) == QosClass::bwt);
}

TEST_CASE("MWT bounds for the reference model") {
  const MwtBounds b = mwt_bounds(reference_model(), 1.0, 0.005);
  CHECK(b.psi_lower.psi == doctest::Approx(2.6144887747929).epsilon(1e-12));
  CHECK(b.psi_upper.psi == doctest::Approx(2.9635931374025).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(2.5339436346954).epsilon(1e-11));
  CHECK(b.upper == doctest::Approx(3.8489333968792).epsilon(1e-11));
  CHECK(b.argmax == 0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.beta_lower[i] == doctest::Approx(b.psi_lower.psi));
    CHECK(b.beta_upper[i] == doctest::Approx(b.psi_upper.psi));
  }
  CHECK(mwt_upper_poisson(reference_model(), 0.005) == doctest::Approx(3.8482762357739).epsilon(1e-11));

  // Non-Poisson arrivals scale each beta by 1 + (c^2 - 1) P_i / 2.
  const MwtBounds d = mwt_bounds(reference_model(), 0.0, 0.005);
  for (std::size_t i = 0; i < 3; ++i) {
    const double w = reference_model().branches()[i].weight;
    CHECK(d.beta_upper[i] == doctest::Approx((1.0 - w / 2.0) * d.psi_upper.psi).epsilon(1e-14));
  }
  CHECK_THROWS_AS(mwt_bounds(reference_model(), 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(mwt_bounds(reference_model(), 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(mwt_bounds(reference_model(), -1.0, 0.1), InvalidArgument);
}

TEST_CASE("single branch collapses the MWT bounds") {
  for (double alpha : {0.005, 0.05, 0.5}) {
    for (double c : {0.0, 1.0, 1.5}) {
      const MwtBounds b = mwt_bounds(HyperExpService::exponential(0.3), c, alpha);
      CHECK(std::abs(b.upper - b.lower) <= 1e-9);
      CHECK(b.beta_upper[0] == doctest::Approx(b.beta_lower[0]).epsilon(1e-15));
    }
    CHECK(mwt_bounds(HyperExpService::exponential(0.3), 1.0, alpha).lower ==
          doctest::Approx(hw_solve_psi(alpha).psi).epsilon(1e-12));
  }
}

TEST_CASE("allocation objective and optimizer") {
  const HyperExpService h = reference_model();
  const std::vector<double> a{0.002, 0.002, 0.001};
  CHECK(allocation_objective(h, 1.3, a) == doctest::Approx(objective_oracle(h, 1.3, a)).epsilon(1e-13));

  RngStream rng(77, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const HyperExpService s = trial == 0 ? h : random_model(rng, 2 + trial % 2);
    for (double c : {1.0, 0.5}) {
      const double alpha = trial % 2 ? 0.05 : 0.005;
      const AllocationBound opt = mwt_upper_optimized(s, c, alpha);
      const double grid = grid_minimum(s, c, alpha);
      CAPTURE(trial);
      CHECK(opt.converged);
      CHECK(std::accumulate(opt.alphas.begin(), opt.alphas.end(), 0.0) == doctest::Approx(alpha).epsilon(1e-12));
      CHECK(opt.value == doctest::Approx(allocation_objective(s, c, opt.alphas)).epsilon(1e-14));
      CHECK(opt.value <= grid + 1e-9);
      CHECK(opt.value >= grid - 2e-3 * grid);
      CHECK(opt.value <= mwt_bounds(s, c, alpha).upper + 1e-12);
      CHECK(opt.value >= mwt_bounds(s, c, alpha).lower);
    }
  }
}

TEST_CASE("normalized queue density") {
  for (double alpha : {0.001, 0.05, 0.3, 0.9}) {
    const double beta = hw_solve_psi(alpha).psi;
    const NormalizedQueueDensity d(alpha, beta);
    auto f = [&](double x) { return d.pdf(x); };
    const double neg = simpson(f, -beta - 40.0, -1e-300, 200000);
    const double pos = simpson(f, 1e-300, 60.0 / beta, 200000);
    CHECK(neg == doctest::Approx(1.0 - alpha).epsilon(1e-9));
    CHECK(pos == doctest::Approx(alpha).epsilon(1e-9));
    CHECK(d.positive_mass() == alpha);

    // Sampling reproduces the mean of the density.
    const double mean = simpson([&](double x) { return x * d.pdf(x); }, -beta - 40.0, 0.0, 200000) +
                        simpson([&](double x) { return x * d.pdf(x); }, 0.0, 60.0 / beta, 200000);
    RngStream rng(3, 1);
    double s = 0.0;
    double s2 = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      const double x = d.sample(rng);
      s += x;
      s2 += x * x;
    }
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    CHECK(std::abs(s / n - mean) <= 4.0 * se);
  }

  // Monotone coupling in alpha when beta follows psi(alpha).
  for (double u : {0.001, 0.02, 0.2, 0.7}) {
    for (double v : {0.01, 0.5, 0.99}) {
      double prev = -INFINITY;
      for (double alpha = 0.001; alpha < 0.9; alpha *= 1.3) {
        const double x = NormalizedQueueDensity(alpha, hw_solve_psi(alpha).psi).transform(u, v);
        CHECK(x >= prev);
        prev = x;
      }
    }
  }
  CHECK_THROWS_AS(NormalizedQueueDensity(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(NormalizedQueueDensity(0.1, 0.0), InvalidArgument);
}

TEST_CASE("Levy bound sits below the Poisson bound and honours its constraint") {
  const HyperExpService h = reference_model();
  RngStream rng(11, 0);
  const LevyBound lb = mwt_upper_levy(h, 0.005, kMinLevySamples, rng);
  CHECK(lb.value <= mwt_upper_poisson(h, 0.005) + 1e-12);
  CHECK(lb.value == doctest::Approx(allocation_objective(h, 1.0, lb.alphas)).epsilon(1e-14));
  CHECK(lb.tail_estimate + 3.0 * lb.tail_stderr <= 0.005);

  // Fresh Monte Carlo at the returned allocation, with independent draws.
  RngStream check(12, 0);
  std::vector<NormalizedQueueDensity> q;
  for (std::size_t j = 0; j < h.size(); ++j) q.emplace_back(lb.alphas[j], hw_solve_psi(lb.alphas[j]).psi);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      const Branch& b = h.branches()[j];
      s += std::sqrt(b.weight / b.rate) * q[j].sample(check);
    }
    hits += s >= 0.0;
  }
  const double p = static_cast<double>(hits) / n;
  CHECK(p <= 0.005 + 4.0 * std::sqrt(0.005 * 0.995 / n));

  RngStream one(1, 0);
  const LevyBound single = mwt_upper_levy(HyperExpService::exponential(2.0), 0.05, kMinLevySamples, one);
  CHECK(single.value == doctest::Approx(hw_solve_psi(0.05).psi).epsilon(1e-12));
  CHECK_THROWS_AS(mwt_upper_levy(h, 0.005, 1000, one), InvalidArgument);
}

TEST_CASE("BWT and PWT constants") {
  const HyperExpService h = reference_model();
  // (mu^2 sigma^2 + c^2) / (2 mu t1) evaluated in exact arithmetic.
  CHECK(bwt_tau(h, 1.0, 0.5) == doctest::Approx(1.892074363992).epsilon(1e-11));
  CHECK(bwt_tau(HyperExpService::exponential(0.3), 1.0, 0.5) == doctest::Approx(2.0 / 0.3).epsilon(1e-14));
  CHECK(pwt_gamma(HyperExpService::exponential(0.3), 1.0, 1.0, 0.1) ==
        doctest::Approx(7.6752836433).epsilon(1e-10));

  RngStream rng(8, 0);
  for (int i = 0; i < 1000; ++i) {
    const HyperExpService s = random_model(rng, 1 + i % 6);
    const double c = 2.0 * rng.uniform();
    const double t1 = 0.1 + rng.uniform();
    const double jensen = (c * c + 1.0) / (2.0 * s.rate() * t1);
    if (s.size() == 1) {
      CHECK(bwt_tau(s, c, t1) == doctest::Approx(jensen).epsilon(1e-12));
    } else {
      CHECK(bwt_tau(s, c, t1) > jensen + 1e-12);
    }
  }
  CHECK_THROWS_AS(bwt_tau(h, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(pwt_gamma(h, 1.0, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("Kingman tail") {
  const HyperExpService e = HyperExpService::exponential(0.3);
  // At the BWT fixed point the tail equals exp(-n^p).
  const double tau = bwt_tau(e, 1.0, 0.5);
  const double n = 271.0;
  const double rho = 1.0 - tau * std::pow(n, -0.75);
  CHECK(kingman_wait_tail(e, 1.0, rho, n, 0.5) == doctest::Approx(std::exp(-std::pow(n, 0.25))).epsilon(1e-12));
  CHECK(kingman_wait_tail(e, 1.0, 0.9, 10.0, 0.0) == 1.0);
  CHECK_THROWS_AS(kingman_wait_tail(e, 1.0, 1.0, 10.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(kingman_wait_tail(e, 1.0, 0.0, 10.0, 1.0), InvalidArgument);
}

TEST_CASE("ceil count snaps near-integers") {
  CHECK(ceil_count(10000.000000001) == 10000);
  CHECK(ceil_count(std::pow(0.09999999999999998, -4.0)) == 10000);
  CHECK(ceil_count(10000.01) == 10001);
  CHECK(ceil_count(76.2) == 77);
  CHECK(ceil_count(0.2) == 1);
  CHECK(ceil_count(0.0) == 1);
}

TEST_CASE("machine counts at the exponential desk scale") {
  const HyperExpService e = HyperExpService::exponential(0.3);
  CHECK(machines_for(Zwt{0.25}, e, 1.0, 0.9).n == 10000);
  CHECK(machines_for(Bwt{0.5, 0.25}, e, 1.0, 0.9).n == 271);
  CHECK(machines_for(Bwt{0.5, 0.25}, e, 1.0, 0.85).n == 158);
  CHECK(machines_for(Pwt{1.0, 0.1}, e, 1.0, 0.9).n == 77);
  const SizingResult m = machines_for(Mwt{0.005}, e, 1.0, 0.9);
  CHECK(m.n_lo == m.n_hi);
  CHECK(m.n == 684);

  const HyperExpService h = reference_model();
  const SizingResult hm = machines_for(Mwt{0.005}, h, 1.0, 0.9);
  CHECK(hm.n_lo == 643);
  CHECK(hm.n_hi == 1482);
  CHECK(hm.n == hm.n_hi);
  CHECK(machines_for(Mwt{0.005}, h, 1.0, 0.85).n_lo == 286);
  CHECK(machines_for(Mwt{0.005}, h, 1.0, 0.85).n_hi == 659);
  CHECK(machines_for(Bwt{0.5, 0.25}, h, 1.0, 0.9).n == 51);
  CHECK(machines_for(Bwt{0.5, 0.25}, h, 1.0, 0.85).n == 30);

  CHECK_THROWS_AS(machines_for(Mwt{0.005}, h, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(machines_for(Mwt{0.005}, h, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("sizing results are reproducible from their constants") {
  const HyperExpService h = reference_model();
  const QosRequirement classes[] = {Zwt{0.3}, Mwt{0.01}, Bwt{0.7, 0.2}, Pwt{2.0, 0.05}};
  for (const QosRequirement& q : classes) {
    for (double rho = 0.5; rho < 0.995; rho += 0.0137) {
      const SizingResult r = machines_for(q, h, 0.8, rho);
      const SizingResult again = recompute_machines(r);
      CHECK(again.n == r.n);
      CHECK(again.n_lo == r.n_lo);
      CHECK(again.n_hi == r.n_hi);
      CHECK(r.n >= 1);
      CHECK(r.n_lo <= r.n_hi);
    }
  }
}

TEST_CASE("BWT count satisfies its fixed point with minimal slack") {
  RngStream rng(21, 0);
  for (int i = 0; i < 200; ++i) {
    const HyperExpService s = random_model(rng, 1 + i % 4);
    const Bwt q{0.2 + rng.uniform(), 0.05 + 0.4 * rng.uniform()};
    const double rho = 0.5 + 0.49 * rng.uniform();
    const double tau = bwt_tau(s, 1.0, q.t1);
    const auto n = static_cast<double>(machines_for(q, s, 1.0, rho).n);
    // (1 - rho) n^(1-p) >= tau at n, and fails one machine earlier.
    CHECK((1.0 - rho) * std::pow(n, 1.0 - q.tail_exponent) >= tau * (1.0 - 1e-9));
    if (n > 1.0) CHECK((1.0 - rho) * std::pow(n - 1.0, 1.0 - q.tail_exponent) < tau);
  }
}

TEST_CASE("arrival-rate sizing is the smallest sufficient count") {
  const HyperExpService h = reference_model();
  const QosRequirement classes[] = {Zwt{0.25}, Mwt{0.005}, Bwt{0.5, 0.25}, Pwt{1.0, 0.1}};
  for (const QosRequirement& q : classes) {
    for (double lambda : {1.0, 17.0, 250.0, 4000.0}) {
      const SizingResult r = machines_for_rate(q, h, 1.0, lambda);
      CHECK(r.constants.at("lambda") == lambda);
      for (std::int64_t n : {r.n_lo, r.n_hi}) {
        const double rho = lambda / (static_cast<double>(n) * h.rate());
        CHECK(rho < 1.0);
        const SizingResult at = machines_for(q, h, 1.0, rho);
        CHECK((n == r.n_lo ? at.n_lo : at.n_hi) <= n);
        if (n > 1) {
          const double rho_less = lambda / (static_cast<double>(n - 1) * h.rate());
          if (rho_less < 1.0) {
            const SizingResult less = machines_for(q, h, 1.0, rho_less);
            CHECK((n == r.n_lo ? less.n_lo : less.n_hi) > n - 1);
          }
        }
      }
    }
  }
}

TEST_CASE("max rho inverts the machine count") {
  const HyperExpService h = reference_model();
  const QosRequirement classes[] = {Zwt{0.25}, Mwt{0.005}, Bwt{0.5, 0.25}, Pwt{1.0, 0.1}};
  for (const QosRequirement& q : classes) {
    for (double n : {50.0, 400.0, 5000.0}) {
      const MaxRho m = max_rho_for(q, h, 1.0, n);
      CHECK(m.rho_lo <= m.rho_hi);
      if (m.rho_lo > 0.0) {
        const SizingResult r = machines_for(q, h, 1.0, m.rho_lo);
        CHECK(r.n_hi <= static_cast<std::int64_t>(n));
      }
    }
  }
}

TEST_CASE("tightness ratio") {
  for (double alpha : {0.01, 0.15, 0.5}) CHECK(ratio_r1(1, alpha) == 1.0);
  CHECK(ratio_r1(3, 0.005) == doctest::Approx(2.9635931374025 / 2.6144887747929).epsilon(1e-12));
  const TightnessRatio t = tightness_ratio(reference_model(), 1.0, 0.005);
  CHECK(t.r2 == doctest::Approx(1.3400211311688).epsilon(1e-12));
  CHECK(t.r == doctest::Approx(t.r1 * t.r2).epsilon(1e-15));
  const MwtBounds b = mwt_bounds(reference_model(), 1.0, 0.005);
  CHECK(t.r == doctest::Approx(b.upper / b.lower).epsilon(1e-12));

  RngStream rng(31, 0);
  for (int i = 0; i < 500; ++i) {
    const HyperExpService s = random_model(rng, 1 + i % 6);
    const TightnessRatio r = tightness_ratio(s, 1.0, 0.05);
    CHECK(r.r2 >= 1.0 - 1e-12);
    CHECK(r.r2 <= static_cast<double>(s.size()) + 1e-12);
  }
  CHECK_THROWS_AS(ratio_r1(0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(ratio_r1(2, 1.0), InvalidArgument);
}
