#include <algorithm>
#include <cmath>
#include <random>

#include "cqn/net_model.hpp"
#include "cqn/scenarios.hpp"
#include "doctest.h"

using namespace cqn;

namespace {

NetworkSpec one_server(std::int64_t n, double lambda, std::vector<double> p, std::vector<double> mu) {
  NetworkSpec s;
  s.units = {n};
  s.server_rate = {lambda};
  s.routing = {std::move(p)};
  s.client_rate = std::move(mu);
  s.departure.assign(s.client_rate.size(), DepartureLaw{});
  return s;
}

bool has(const std::vector<Violation>& v, ViolationCode code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

}  // namespace

TEST_CASE("derived parameters match a hand computation") {
  const auto spec = bundled_scenario("fully_connected").network;
  const auto d = derive(spec);
  // lambda_{i,j} = 4 p_{i,j}, alpha = (1/2, 1/2), rho_j = sum_i lambda_{i,j} alpha_i / mu_j
  CHECK(d.lambda[0][3] == doctest::Approx(2.0));
  CHECK(d.alpha[1] == doctest::Approx(0.5));
  const double expected[] = {0.5, 0.4, 0.5, 2.0};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(d.rho[j] == doctest::Approx(expected[j]).epsilon(1e-14));
    CHECK(d.rho_finite[j] == doctest::Approx(d.rho[j]).epsilon(1e-14));
  }
  CHECK(d.bottleneck() == 3);
}

TEST_CASE("unit_sum weights of every client sum to one") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    NetworkSpec s;
    const std::size_t r = 1 + trial % 3;
    const std::size_t k = 2 + trial % 4;
    for (std::size_t i = 0; i < r; ++i) {
      s.units.push_back(100 + 37 * static_cast<std::int64_t>(i));
      s.server_rate.push_back(u(gen));
      std::vector<double> row(k);
      double total = 0.0;
      for (auto& p : row) total += (p = u(gen));
      for (auto& p : row) p /= total;
      s.routing.push_back(row);
    }
    for (std::size_t j = 0; j < k; ++j) s.client_rate.push_back(u(gen));
    s.departure.assign(k, DepartureLaw{});
    const auto d = derive(s);
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < r; ++i) sum += d.beta[i][j];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single server gives unit weights") {
  const auto d = derive(one_server(2000, 4.0, {0.5, 0.5}, {4.0, 1.0}));
  CHECK(d.beta[0][0] == doctest::Approx(1.0));
  CHECK(d.beta[0][1] == doctest::Approx(1.0));
}

TEST_CASE("literal convention drops the division by mu") {
  auto spec = one_server(2000, 4.0, {0.5, 0.5}, {4.0, 1.0});
  spec.beta_convention = BetaConvention::literal;
  const auto d = derive(spec);
  CHECK(d.beta[0][0] == doctest::Approx(4.0));
  CHECK(d.beta[0][1] == doctest::Approx(1.0));
}

TEST_CASE("validation codes") {
  SUBCASE("row sum 0.9") {
    const auto v = validate_spec(one_server(100, 1.0, {0.4, 0.5}, {1.0, 0.1}));
    CHECK(has(v, ViolationCode::row_not_stochastic));
  }
  SUBCASE("two saturated clients") {
    const auto v = validate_spec(one_server(100, 4.0, {0.5, 0.5}, {1.0, 1.0}));
    CHECK(has(v, ViolationCode::multiple_bottlenecks));
  }
  SUBCASE("no saturated client") {
    const auto v = validate_spec(one_server(100, 1.0, {0.5, 0.5}, {4.0, 4.0}));
    CHECK(has(v, ViolationCode::no_bottleneck));
  }
  SUBCASE("bottleneck first") {
    const auto spec = one_server(100, 4.0, {0.5, 0.5}, {1.0, 4.0});
    CHECK(has(validate_spec(spec), ViolationCode::bottleneck_not_last));
    const auto fixed = normalize_order(spec);
    CHECK(validate_spec(fixed).empty());
    CHECK(fixed.client_rate == std::vector<double>{4.0, 1.0});
    CHECK(fixed.routing[0] == std::vector<double>{0.5, 0.5});
  }
  SUBCASE("rho_k = 1 is accepted") {
    CHECK(validate_spec(bundled_scenario("critical").network).empty());
  }
  SUBCASE("structural") {
    auto spec = one_server(0, 1.0, {0.5, 0.5}, {1.0, 0.1});
    CHECK(has(validate_spec(spec), ViolationCode::nonpositive_units));
    spec.routing[0].pop_back();
    CHECK(has(validate_spec(spec), ViolationCode::dimension_mismatch));
    CHECK_THROWS_AS(derive(spec), std::invalid_argument);
    CHECK(has(validate_spec(NetworkSpec{}), ViolationCode::empty_network));
  }
  SUBCASE("bad departure law") {
    auto spec = one_server(100, 4.0, {0.5, 0.5}, {4.0, 1.0});
    spec.departure[0].kind = DepartureKind::gamma;
    spec.departure[0].shape = -1.0;
    CHECK(has(validate_spec(spec), ViolationCode::invalid_departure_law));
  }
}

TEST_CASE("topology classification of the bundled examples") {
  SUBCASE("two components") {
    const auto spec = bundled_scenario("two_components").network;
    const auto t = classify(spec, derive(spec));
    REQUIRE(t.components.size() == 2);
    CHECK(t.components[0].servers == std::vector<std::size_t>{0});
    CHECK(t.components[0].clients == std::vector<std::size_t>{0, 1});
    CHECK(t.components[1].clients == std::vector<std::size_t>{2, 3});
    CHECK(t.regime[0] == Regime::disjoint);
    CHECK(t.regime[2] == Regime::same_hubs);
  }
  SUBCASE("fully connected") {
    const auto spec = bundled_scenario("fully_connected").network;
    const auto t = classify(spec, derive(spec));
    CHECK(t.components.size() == 1);
    for (std::size_t j = 0; j < 3; ++j) CHECK(t.regime[j] == Regime::same_hubs);
    CHECK(t.regime[3] == Regime::bottleneck);
    CHECK(t.bottleneck_ids == std::vector<std::size_t>{3});
  }
  SUBCASE("disjoint hub") {
    const auto spec = bundled_scenario("disjoint_hub").network;
    const auto t = classify(spec, derive(spec));
    CHECK(t.regime[1] == Regime::disjoint);
    CHECK_FALSE(t.shares_hub_with_bottleneck[1]);
    CHECK(t.regime[0] == Regime::general);
    CHECK(t.shares_hub_with_bottleneck[0]);
  }
  SUBCASE("critical outranks single server") {
    const auto spec = bundled_scenario("critical").network;
    const auto t = classify(spec, derive(spec));
    CHECK(t.regime[0] == Regime::critical);
  }
  SUBCASE("single server") {
    const auto spec = bundled_scenario("markov_one_server").network;
    CHECK(classify(spec, derive(spec)).regime[0] == Regime::single_server);
  }
}

TEST_CASE("components partition the stations") {
  for (const auto& name : bundled_scenario_names()) {
    const auto spec = bundled_scenario(name).network;
    const auto t = classify(spec, derive(spec));
    std::size_t servers = 0, clients = 0;
    for (const auto& c : t.components) {
      servers += c.servers.size();
      clients += c.clients.size();
    }
    CHECK(servers == spec.servers());
    CHECK(clients == spec.clients());
  }
}
