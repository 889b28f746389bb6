#include "cqn/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cqn {

const char* to_string(BetaConvention c) noexcept {
  return c == BetaConvention::unit_sum ? "unit_sum" : "literal";
}

const char* to_string(ViolationCode code) noexcept {
  switch (code) {
    case ViolationCode::empty_network:
      return "EMPTY_NETWORK";
    case ViolationCode::dimension_mismatch:
      return "DIMENSION_MISMATCH";
    case ViolationCode::nonpositive_units:
      return "NONPOSITIVE_UNITS";
    case ViolationCode::nonpositive_server_rate:
      return "NONPOSITIVE_SERVER_RATE";
    case ViolationCode::nonpositive_client_rate:
      return "NONPOSITIVE_CLIENT_RATE";
    case ViolationCode::negative_probability:
      return "NEGATIVE_PROBABILITY";
    case ViolationCode::row_not_stochastic:
      return "ROW_NOT_STOCHASTIC";
    case ViolationCode::invalid_departure_law:
      return "INVALID_DEPARTURE_LAW";
    case ViolationCode::no_bottleneck:
      return "NO_BOTTLENECK";
    case ViolationCode::multiple_bottlenecks:
      return "MULTIPLE_BOTTLENECKS";
    case ViolationCode::bottleneck_not_last:
      return "BOTTLENECK_NOT_LAST";
  }
  return "UNKNOWN";
}

const char* to_string(Regime c) noexcept {
  switch (c) {
    case Regime::single_server:
      return "SINGLE_SERVER";
    case Regime::same_hubs:
      return "SAME_HUBS";
    case Regime::disjoint:
      return "DISJOINT";
    case Regime::critical:
      return "CRITICAL";
    case Regime::general:
      return "GENERAL";
    case Regime::bottleneck:
      return "BOTTLENECK";
  }
  return "UNKNOWN";
}

std::int64_t NetworkSpec::total_units() const noexcept {
  return std::accumulate(units.begin(), units.end(), std::int64_t{0});
}

namespace {

std::string station(const char* kind, std::size_t index) { return std::string(kind) + " " + std::to_string(index + 1); }

// Violations after which derive() cannot run.
std::vector<Violation> structural_violations(const NetworkSpec& spec) {
  std::vector<Violation> out;
  const std::size_t r = spec.servers();
  const std::size_t k = spec.clients();
  if (r == 0 || k == 0) {
    out.push_back({ViolationCode::empty_network, "network needs at least one server and one client station"});
    return out;
  }
  if (spec.server_rate.size() != r || spec.routing.size() != r || spec.departure.size() != k) {
    out.push_back({ViolationCode::dimension_mismatch, "per-station arrays disagree in length"});
    return out;
  }
  for (std::size_t i = 0; i < r; ++i) {
    if (spec.routing[i].size() != k) {
      out.push_back({ViolationCode::dimension_mismatch, station("routing row of server", i) + " has wrong length"});
      return out;
    }
  }
  for (std::size_t i = 0; i < r; ++i) {
    if (spec.units[i] < 1) out.push_back({ViolationCode::nonpositive_units, station("server", i)});
    if (!(spec.server_rate[i] > 0.0 && std::isfinite(spec.server_rate[i])))
      out.push_back({ViolationCode::nonpositive_server_rate, station("server", i)});
  }
  for (std::size_t j = 0; j < k; ++j)
    if (!(spec.client_rate[j] > 0.0 && std::isfinite(spec.client_rate[j])))
      out.push_back({ViolationCode::nonpositive_client_rate, station("client", j)});
  return out;
}

}  // namespace

std::vector<Violation> validate_spec(const NetworkSpec& spec) {
  auto out = structural_violations(spec);
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < spec.servers(); ++i) {
    double sum = 0.0;
    bool negative = false;
    for (double p : spec.routing[i]) {
      if (!(p >= 0.0)) negative = true;
      sum += p;
    }
    if (negative) out.push_back({ViolationCode::negative_probability, station("server", i)});
    if (!(std::abs(sum - 1.0) <= kRowSumTolerance))
      out.push_back({ViolationCode::row_not_stochastic, station("server", i) + " row sums to " + std::to_string(sum)});
  }
  for (std::size_t j = 0; j < spec.clients(); ++j)
    for (const auto& msg : check_law(spec.departure[j]))
      out.push_back({ViolationCode::invalid_departure_law, station("client", j) + ": " + msg});

  const auto params = derive(spec);
  std::vector<std::size_t> bottlenecks;
  for (std::size_t j = 0; j < params.clients(); ++j)
    if (params.rho[j] >= 1.0 - kCriticalTolerance) bottlenecks.push_back(j);
  if (bottlenecks.empty()) {
    out.push_back({ViolationCode::no_bottleneck, "no client station has rho >= 1"});
  } else if (bottlenecks.size() > 1) {
    std::string ids;
    for (auto j : bottlenecks) ids += (ids.empty() ? "" : ", ") + std::to_string(j + 1);
    out.push_back({ViolationCode::multiple_bottlenecks, "clients " + ids + " have rho >= 1"});
  } else if (bottlenecks.front() != spec.clients() - 1) {
    out.push_back({ViolationCode::bottleneck_not_last, station("client", bottlenecks.front()) + " is the bottleneck"});
  }
  return out;
}

std::vector<double> traffic_intensity(const std::vector<std::vector<double>>& lambda,
                                      const std::vector<double>& shares, const std::vector<double>& mu) {
  std::vector<double> rho(mu.size(), 0.0);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double input = 0.0;
    for (std::size_t i = 0; i < shares.size(); ++i) input += lambda[i][j] * shares[i];
    rho[j] = input / mu[j];
  }
  return rho;
}

DerivedParams derive(const NetworkSpec& spec) {
  if (auto bad = structural_violations(spec); !bad.empty())
    throw std::invalid_argument(std::string("cannot derive parameters: ") + to_string(bad.front().code));
  const std::size_t r = spec.servers();
  const std::size_t k = spec.clients();
  const double n = static_cast<double>(spec.total_units());

  DerivedParams d;
  d.mu = spec.client_rate;
  d.beta_convention = spec.beta_convention;
  d.lambda.assign(r, std::vector<double>(k, 0.0));
  d.alpha.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    d.alpha[i] = static_cast<double>(spec.units[i]) / n;
    for (std::size_t j = 0; j < k; ++j) d.lambda[i][j] = spec.server_rate[i] * spec.routing[i][j];
  }

  // rho_j(N) = (1/(mu_j N)) sum_i lambda_{i,j} N_i, accumulated in unit counts.
  d.rho_finite.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    double input = 0.0;
    for (std::size_t i = 0; i < r; ++i) input += d.lambda[i][j] * static_cast<double>(spec.units[i]);
    d.rho_finite[j] = input / (spec.client_rate[j] * n);
  }
  d.rho = traffic_intensity(d.lambda, d.alpha, d.mu);

  d.beta.assign(r, std::vector<double>(k, 0.0));
  d.feeding_servers.assign(k, {});
  d.fed_clients.assign(r, {});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!(d.lambda[i][j] > 0.0)) continue;
      d.feeding_servers[j].push_back(i);
      d.fed_clients[i].push_back(j);
      const double w = d.lambda[i][j] * d.alpha[i] / d.rho[j];
      d.beta[i][j] = spec.beta_convention == BetaConvention::unit_sum ? w / d.mu[j] : w;
    }
  }
  return d;
}

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

TopologyReport classify(const NetworkSpec& spec, const DerivedParams& params) {
  const std::size_t r = params.servers();
  const std::size_t k = params.clients();
  TopologyReport report;

  // Nodes 0..r-1 are servers, r..r+k-1 clients.
  DisjointSets sets(r + k);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (params.feeds(i, j)) sets.unite(i, r + j);
  std::vector<std::size_t> slot(r + k, SIZE_MAX);
  for (std::size_t node = 0; node < r + k; ++node) {
    const std::size_t root = sets.find(node);
    if (slot[root] == SIZE_MAX) {
      slot[root] = report.components.size();
      report.components.emplace_back();
    }
    auto& comp = report.components[slot[root]];
    if (node < r)
      comp.servers.push_back(node);
    else
      comp.clients.push_back(node - r);
  }

  for (std::size_t j = 0; j < k; ++j)
    if (params.rho[j] >= 1.0 - kCriticalTolerance) report.bottleneck_ids.push_back(j);

  const std::size_t b = params.bottleneck();
  const auto& hub = params.feeding_servers[b];
  const bool critical = std::abs(params.rho[b] - 1.0) <= kCriticalTolerance;
  report.shares_hub_with_bottleneck.assign(k, false);
  report.regime.assign(k, Regime::general);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& own = params.feeding_servers[j];
    bool shared = false;
    for (auto i : own) shared = shared || std::find(hub.begin(), hub.end(), i) != hub.end();
    report.shares_hub_with_bottleneck[j] = shared;
    if (j == b) {
      report.regime[j] = Regime::bottleneck;
    } else if (critical) {
      report.regime[j] = Regime::critical;
    } else if (spec.servers() == 1) {
      report.regime[j] = Regime::single_server;
    } else if (!shared) {
      report.regime[j] = Regime::disjoint;
    } else if (own == hub) {
      report.regime[j] = Regime::same_hubs;
    }
  }
  return report;
}

NetworkSpec normalize_order(const NetworkSpec& spec) {
  const auto params = derive(spec);
  std::vector<std::size_t> bottlenecks;
  for (std::size_t j = 0; j < params.clients(); ++j)
    if (params.rho[j] >= 1.0 - kCriticalTolerance) bottlenecks.push_back(j);
  if (bottlenecks.size() != 1) return spec;

  // Keep the relative order of the other stations.
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < spec.clients(); ++j)
    if (j != bottlenecks.front()) order.push_back(j);
  order.push_back(bottlenecks.front());

  NetworkSpec out = spec;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.client_rate[pos] = spec.client_rate[order[pos]];
    out.departure[pos] = spec.departure[order[pos]];
    for (std::size_t i = 0; i < spec.servers(); ++i) out.routing[i][pos] = spec.routing[i][order[pos]];
  }
  return out;
}

}  // namespace cqn
