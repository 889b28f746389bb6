#include <algorithm>
#include <cmath>
#include <vector>

#include "cqn/point_process.hpp"
#include "cqn/rng.hpp"
#include "doctest.h"

using namespace cqn;

namespace {

DepartureLaw law_of(DepartureKind kind) {
  DepartureLaw law;
  law.kind = kind;
  if (kind == DepartureKind::gamma) law.shape = 2.0;
  if (kind == DepartureKind::markov_modulated) {
    law.phase_rates = {2.0, 0.5};
    law.transition = {{0.7, 0.3}, {0.4, 0.6}};
  }
  return law;
}

constexpr DepartureKind kAll[] = {DepartureKind::poisson, DepartureKind::gamma, DepartureKind::deterministic,
                                  DepartureKind::markov_modulated};

// Two-sample Kolmogorov-Smirnov statistic.
double ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("deterministic epochs sit on the lattice") {
  EpochStream s({law_of(DepartureKind::deterministic), 1.0}, 1);
  CHECK_FALSE(s.last_before(0.5).has_value());
  CHECK(*s.last_before(2.5) == 2.0);
  CHECK(s.count_until(2.5) == 2);
  CHECK(s.count_until(3.0) == 3);

  // mu N epochs per unit time, exactly, over a long horizon
  const double mu = 2.5, n = 2000;
  EpochStream lattice({law_of(DepartureKind::deterministic), 1.0 / (mu * n)}, 1);
  CHECK(lattice.count_until(2.0) == 10000);
  CHECK(lattice.count_until(5.0) == 25000);
}

TEST_CASE("last_before rejects decreasing queries") {
  EpochStream s({law_of(DepartureKind::poisson), 1.0}, 3);
  s.last_before(4.0);
  CHECK_THROWS_AS(s.last_before(3.0), std::domain_error);
  CHECK_THROWS_AS(s.last_before(-1.0), std::domain_error);
}

TEST_CASE("epochs are strictly increasing and reproducible") {
  for (auto kind : kAll) {
    EpochStream a({law_of(kind), 0.01}, 99), b({law_of(kind), 0.01}, 99);
    double prev = 0.0;
    for (int n = 0; n < 2000; ++n) {
      const double x = a.advance();
      CHECK(x > prev);
      CHECK(x == b.advance());
      prev = x;
    }
  }
}

TEST_CASE("mean inter-epoch time matches the configured mean") {
  for (auto kind : kAll) {
    const double mean = 0.25;
    EpochStream s({law_of(kind), mean}, 5);
    const int n = 200000;
    double last = 0.0;
    for (int i = 0; i < n; ++i) last = s.advance();
    const double se = mean * std::sqrt(std::max(asymptotic_dispersion(law_of(kind)), 1e-12) / n);
    CAPTURE(to_string(kind));
    CHECK(std::abs(last / n - mean) <= 5.0 * se + 1e-12);
  }
}

TEST_CASE("stationary distribution of a two-phase chain") {
  const auto pi = stationary_distribution({{0.7, 0.3}, {0.4, 0.6}});
  CHECK(pi[0] == doctest::Approx(4.0 / 7.0));
  CHECK(pi[1] == doctest::Approx(3.0 / 7.0));
  CHECK_THROWS_AS(stationary_distribution({{1.0, 0.0}, {0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("dispersion of the modulated law agrees with a truncated covariance series") {
  const auto law = law_of(DepartureKind::markov_modulated);
  const auto& P = law.transition;
  const auto pi = stationary_distribution(P);
  std::vector<double> m = {1.0 / law.phase_rates[0], 1.0 / law.phase_rates[1]};
  const double mean = pi[0] * m[0] + pi[1] * m[1];
  const double var = pi[0] * 2 * m[0] * m[0] + pi[1] * 2 * m[1] * m[1] - mean * mean;
  // cov(xi_0, xi_n) = sum_s pi_s d_s (P^n d)_s with d = m - mean
  std::vector<double> d = {m[0] - mean, m[1] - mean}, v = d;
  double cov = 0.0;
  for (int n = 1; n < 400; ++n) {
    v = {P[0][0] * v[0] + P[0][1] * v[1], P[1][0] * v[0] + P[1][1] * v[1]};
    cov += pi[0] * d[0] * v[0] + pi[1] * d[1] * v[1];
  }
  CHECK(asymptotic_dispersion(law) == doctest::Approx((var + 2 * cov) / (mean * mean)).epsilon(1e-12));

  auto equal = law;
  equal.phase_rates = {1.5, 1.5};
  CHECK(asymptotic_dispersion(equal) == doctest::Approx(1.0));
  CHECK(asymptotic_dispersion(law_of(DepartureKind::gamma)) == 0.5);
  CHECK(asymptotic_dispersion(law_of(DepartureKind::deterministic)) == 0.0);
}

TEST_CASE("counting variance follows the dispersion constant") {
  // Var S(t) ~ c^2 t / mean for large t, checked over independent streams.
  for (auto kind : {DepartureKind::poisson, DepartureKind::gamma, DepartureKind::markov_modulated}) {
    const auto law = law_of(kind);
    const int reps = 4000;
    const double t = 400.0;
    double sum = 0.0, sq = 0.0;
    for (int m = 0; m < reps; ++m) {
      EpochStream s({law, 1.0}, derive_seed(17, StreamPurpose::client_departures, 0, m));
      const double c = static_cast<double>(s.count_until(t));
      sum += c;
      sq += c * c;
    }
    const double mean = sum / reps;
    const double var = sq / reps - mean * mean;
    CAPTURE(to_string(kind));
    CHECK(var / t == doctest::Approx(asymptotic_dispersion(law)).epsilon(0.1));
  }
}

TEST_CASE("first and hundredth gaps share a law") {
  for (auto kind : {DepartureKind::poisson, DepartureKind::gamma, DepartureKind::markov_modulated}) {
    const int reps = 20000;
    std::vector<double> first, later;
    for (int m = 0; m < reps; ++m) {
      EpochStream s({law_of(kind), 1.0}, derive_seed(23, StreamPurpose::client_departures, 1, m));
      double prev = s.advance();
      first.push_back(prev);
      for (int n = 2; n <= 100; ++n) {
        const double x = s.advance();
        if (n == 100) later.push_back(x - prev);
        prev = x;
      }
    }
    // 1% critical value of the two-sample statistic
    CAPTURE(to_string(kind));
    CHECK(ks(first, later) < 1.628 * std::sqrt(2.0 / reps));
  }
}

TEST_CASE("law validation") {
  DepartureLaw bad;
  bad.kind = DepartureKind::markov_modulated;
  CHECK_FALSE(check_law(bad).empty());
  bad.phase_rates = {1.0, 2.0};
  bad.transition = {{0.5, 0.6}, {0.5, 0.5}};
  CHECK_FALSE(check_law(bad).empty());
  CHECK(check_law(law_of(DepartureKind::markov_modulated)).empty());
  CHECK_THROWS_AS(EpochStream({bad, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(EpochStream({law_of(DepartureKind::poisson), 0.0}, 1), std::invalid_argument);
  CHECK(departure_kind_from_string("renewal_gamma") == DepartureKind::gamma);
  CHECK_FALSE(departure_kind_from_string("weibull").has_value());
}

TEST_CASE("rng streams are separated by purpose, index and replication") {
  const auto a = derive_seed(1, StreamPurpose::server_alarms, 0, 0);
  CHECK(a != derive_seed(1, StreamPurpose::routing, 0, 0));
  CHECK(a != derive_seed(1, StreamPurpose::server_alarms, 1, 0));
  CHECK(a != derive_seed(1, StreamPurpose::server_alarms, 0, 1));
  Xoshiro256 g(42);
  double sum = 0.0;
  for (int n = 0; n < 100000; ++n) {
    const auto k = g.below(7);
    CHECK(k < 7);
    sum += g.uniform();
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
