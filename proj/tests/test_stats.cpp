#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cqn/scenarios.hpp"
#include "cqn/stats.hpp"
#include "doctest.h"

using namespace cqn;

namespace {

// One client, Q rises to 2 and falls back to 0 within [0, 4].
Trajectory hand_trajectory() {
  Trajectory tr;
  tr.servers = 1;
  tr.clients = 1;
  tr.levels = 3;
  tr.horizon = 4.0;
  tr.grid = {0.0, 2.0, 4.0};
  tr.queue = {0, 2, 0};
  tr.class_queue = {0, 2, 0};
  tr.server = {5, 3, 5};
  tr.stations.resize(1);
  tr.stations[0].queue_path = {{1.0, 1}, {2.0, 2}, {2.5, 1}, {3.5, 0}};
  tr.stations[0].predeparture = {{0.5, 0}, {2.5, 2}, {3.5, 1}};
  tr.arrivals = {2};
  tr.departures = {2};
  tr.epochs = {3};
  tr.final_queue = {0};
  return tr;
}

}  // namespace

TEST_CASE("integral pieces of a hand path") {
  const auto tr = hand_trajectory();
  // rho_j = 1: lhs[l] is the time spent at l, rhs[l] the time the last record reads l + 1
  const auto s = integral_sample(tr, 0, 3.0, 3, [](double x) { return x; });
  CHECK(s.lhs == std::vector<double>{1.0, 1.5, 0.5, 0.0});
  CHECK(s.rhs == std::vector<double>{0.0, 0.5, 0.0, 0.0});
  const auto full = integral_sample(tr, 0, 4.0, 3, [](double x) { return 2.0 * x; });
  CHECK(full.lhs == std::vector<double>{3.0, 4.0, 1.0, 0.0});
  CHECK(full.rhs == std::vector<double>{0.5, 1.0, 0.0, 0.0});

  CHECK(predeparture_value(tr, 0, 0.4) == 0);
  CHECK(predeparture_value(tr, 0, 2.5) == 2);
  CHECK(predeparture_value(tr, 0, 3.0) == 2);
  CHECK(predeparture_value(tr, 0, 4.0) == 1);
  CHECK_THROWS_AS(predeparture_value(tr, 0, 5.0), std::domain_error);
  CHECK_THROWS_AS(predeparture_value(tr, 1, 1.0), std::out_of_range);
  CHECK(grid_index(tr, 2.0) == 1);
  CHECK_THROWS_AS(grid_index(tr, 1.0), std::domain_error);

  auto stripped = tr;
  stripped.stations[0].predeparture.clear();
  CHECK_THROWS_AS(predeparture_value(stripped, 0, 1.0), std::invalid_argument);
}

TEST_CASE("tabulate and total variation") {
  const std::vector<std::int32_t> values = {0, 0, 1, 3, 7, 2, 0, 1};
  const auto d = tabulate(0, 1.0, 2, values);
  CHECK(d.pmf == std::vector<double>{3.0 / 8, 2.0 / 8, 1.0 / 8});
  CHECK(d.tail == 2.0 / 8);
  CHECK(d.std_error[0] == doctest::Approx(std::sqrt(3.0 / 8 * 5.0 / 8 / 8)));
  const auto c = d.closed();
  CHECK(c.size() == 4);

  const std::vector<double> p = {0.5, 0.5, 0.0}, q = {0.0, 0.5, 0.5};
  CHECK(tv_distance(p, q) == 0.5);
  CHECK(tv_distance(p, p) == 0.0);
  const std::vector<double> short_q = {1.0};
  CHECK_THROWS_AS(tv_distance(p, short_q), std::invalid_argument);
}

TEST_CASE("geometric law") {
  const auto g = geometric_pmf(0.5, 3);
  CHECK(g == std::vector<double>{0.5, 0.25, 0.125, 0.0625, 0.0625});
  for (double rho : {0.0, 0.3, 0.9}) {
    const auto p = geometric_pmf(rho, 10);
    double total = 0.0;
    for (double x : p) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(geometric_pmf(1.0, 3), std::domain_error);
}

TEST_CASE("mean_and_error") {
  const std::vector<double> xs = {1.0, 3.0};
  const auto m = mean_and_error(xs);
  CHECK(m.mean == 2.0);
  CHECK(m.std_error == doctest::Approx(1.0));  // sample sd sqrt(2) over sqrt(2)
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  std::vector<double> big(20000);
  for (auto& x : big) x = 2.0 * z(gen);
  const auto b = mean_and_error(big);
  CHECK(b.std_error == doctest::Approx(2.0 / std::sqrt(20000.0)).epsilon(0.03));
  auto shuffled = big;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  CHECK(mean_and_error(shuffled).mean == doctest::Approx(b.mean).epsilon(1e-12));
}

TEST_CASE("combine reports paired differences") {
  std::vector<IntegralSample> samples = {{{1.0}, {0.5}}, {{2.0}, {1.5}}, {{3.0}, {2.5}}};
  const auto e = combine(0, 1.0, samples);
  CHECK(e.lhs[0] == 2.0);
  CHECK(e.rhs[0] == 1.5);
  CHECK(e.diff_error[0] == 0.0);
  CHECK(e.lhs_error[0] == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("one server: the integral relation holds in simulation") {
  auto cfg = bundled_scenario("markov_one_server");
  cfg.network.units = {500};
  auto sim = cfg.sim_config();
  sim.record.queue_paths = true;
  sim.record.stations = {true, false};
  const auto trs = replicate(sim, 200, 4);
  const FluidModel model(derive(cfg.network));
  const auto est = integral_relation(trs, 0, 3.0, 3, model);
  for (std::size_t l = 0; l <= 3; ++l) {
    CHECK(est.lhs[l] >= 0.0);
    CHECK(std::abs(est.lhs[l] - est.rhs[l]) <= 4.0 * est.diff_error[l] + 0.02 * est.lhs[0]);
  }
}

TEST_CASE("queue law early and late differ beyond sampling noise") {
  auto cfg = bundled_scenario("markov_one_server");
  cfg.network.units = {500};
  const auto trs = replicate(cfg.sim_config(), 300, 4);
  const auto early = pmf_at(trs, 0, 0.1, 10).closed();
  const auto late = pmf_at(trs, 0, 5.0, 10).closed();
  CHECK(tv_distance(early, late) > 0.05);
  const auto r = time_invariance_check(trs, 0, 0.1, 5.0, 10);
  CHECK_FALSE(r.pass);
  CHECK_THROWS_AS(time_invariance_check(trs, 0, 5.0, 1.0, 10), std::invalid_argument);
  const auto frac = server_fraction(trs, 0, 5.0, 500.0);
  // fluid occupancy 1 - q(5), q(t) = (1 - e^{-2t}) / 2
  CHECK(frac.mean == doctest::Approx(1.0 - 0.5 * (1.0 - std::exp(-10.0))).epsilon(0.05));
}

TEST_CASE("standard errors shrink by sqrt 2 when replications double") {
  auto cfg = bundled_scenario("markov_one_server");
  cfg.network.units = {300};
  const auto trs = replicate(cfg.sim_config(), 800, 4);
  const std::span<const Trajectory> all(trs);
  const auto half = pmf_at(all.first(400), 0, 3.0, 10);
  const auto full = pmf_at(all, 0, 3.0, 10);
  for (std::size_t l = 0; l < 2; ++l) CHECK(half.std_error[l] / full.std_error[l] == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
  std::vector<double> fractions;
  for (const auto& tr : trs) fractions.push_back(tr.server_at(grid_index(tr, 3.0), 0) / 300.0);
  const std::span<const double> f(fractions);
  CHECK(mean_and_error(f.first(400)).std_error / mean_and_error(f).std_error ==
        doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}
