#include <algorithm>
#include <random>
#include <utility>
#include <vector>

#include "cqn/reflection.hpp"
#include "doctest.h"

using namespace cqn;

TEST_CASE("hand path") {
  // X: 0, -1 at 1, 0 at 2, -2 at 3
  const StepPath x({0.0, 1.0, 2.0, 3.0}, {0.0, -1.0, 0.0, -2.0});
  CHECK(psi(x, 0.5) == 0.0);
  CHECK(psi(x, 1.0) == 1.0);
  CHECK(psi(x, 2.5) == 1.0);
  CHECK(psi(x, 3.0) == 2.0);
  CHECK(phi(x, 2.0) == 1.0);
  const auto r = reflect_with_regulator(x);
  CHECK(r.reflected.values() == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  CHECK(r.regulator.values() == std::vector<double>{0.0, 1.0, 1.0, 2.0});
}

TEST_CASE("from_jumps merges equal epochs") {
  const std::vector<std::pair<double, double>> jumps = {{1.0, 1.0}, {2.0, -1.0}, {2.0, -1.0}, {3.0, 1.0}};
  const auto x = StepPath::from_jumps(jumps);
  CHECK(x.times() == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  CHECK(x.values() == std::vector<double>{0.0, 1.0, -1.0, 0.0});
  CHECK(x.at(2.0) == -1.0);
  CHECK(x.at(1.999) == 1.0);
}

TEST_CASE("invalid paths") {
  CHECK_THROWS_AS(StepPath({0.0, 1.0}, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(StepPath({0.5}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(StepPath({0.0, 2.0, 1.0}, {0.0, 1.0, 2.0}), std::invalid_argument);
  const std::vector<std::pair<double, double>> at_zero = {{0.0, 1.0}};
  CHECK_THROWS_AS(StepPath::from_jumps(at_zero), std::invalid_argument);
  CHECK_THROWS_AS(psi(StepPath(), -1.0), std::domain_error);
}

TEST_CASE("unit-jump walks: Lindley recursion and complementarity") {
  std::mt19937_64 gen(5);
  std::bernoulli_distribution up(0.45);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<double, double>> jumps;
    for (int n = 1; n <= 300; ++n) jumps.emplace_back(0.01 * n, up(gen) ? 1.0 : -1.0);
    const auto x = StepPath::from_jumps(jumps);
    const auto r = reflect_with_regulator(x);
    double q = 0.0;
    double prev_reg = 0.0;
    for (std::size_t n = 0; n < x.pieces(); ++n) {
      if (n > 0) q = std::max(q + jumps[n - 1].second, 0.0);  // queue with lost service at zero
      const double t = x.times()[n];
      CHECK(r.reflected.at(t) == q);
      CHECK(r.reflected.at(t) >= 0.0);
      CHECK(r.regulator.at(t) >= prev_reg);
      // the regulator only grows when the reflected path sits at zero
      if (r.regulator.at(t) > prev_reg) CHECK(r.reflected.at(t) == 0.0);
      CHECK(r.regulator.at(t) == psi(x, t));
      prev_reg = r.regulator.at(t);
    }
  }
}
