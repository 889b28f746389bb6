#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqn/point_process.hpp"

namespace cqn {

// How the arrival-fraction weights beta_{i,j} are normalized.
//   unit_sum: lambda_{i,j} alpha_i / (rho_j mu_j), so the weights of a
//             client station sum to one over its feeding servers.
//   literal:  lambda_{i,j} alpha_i / rho_j.
enum class BetaConvention { unit_sum, literal };

const char* to_string(BetaConvention c) noexcept;

// r server stations (infinite-server, exponential holding) feeding k client
// stations (autonomous service). Zero-based indices; the bottleneck is the
// last client station.
struct NetworkSpec {
  std::vector<std::int64_t> units;           // N_i
  std::vector<double> server_rate;           // lambda_i, per unit
  std::vector<std::vector<double>> routing;  // p_{i,j}, r rows of k
  std::vector<double> client_rate;           // mu_j; mean inter-epoch time is 1/(mu_j N)
  std::vector<DepartureLaw> departure;       // one per client station
  BetaConvention beta_convention = BetaConvention::unit_sum;

  std::size_t servers() const noexcept { return units.size(); }
  std::size_t clients() const noexcept { return client_rate.size(); }
  std::int64_t total_units() const noexcept;

  bool operator==(const NetworkSpec&) const = default;
};

enum class ViolationCode {
  empty_network,
  dimension_mismatch,
  nonpositive_units,
  nonpositive_server_rate,
  nonpositive_client_rate,
  negative_probability,
  row_not_stochastic,
  invalid_departure_law,
  no_bottleneck,
  multiple_bottlenecks,
  bottleneck_not_last,
};

const char* to_string(ViolationCode code) noexcept;

struct Violation {
  ViolationCode code;
  std::string detail;
};

// Traffic intensities within this distance of 1 are treated as exactly 1.
inline constexpr double kCriticalTolerance = 1e-9;
inline constexpr double kRowSumTolerance = 1e-9;

std::vector<Violation> validate_spec(const NetworkSpec& spec);

struct DerivedParams {
  std::vector<std::vector<double>> lambda;  // lambda_{i,j} = lambda_i p_{i,j}
  std::vector<double> alpha;                // N_i / N
  std::vector<double> rho_finite;           // rho_j(N)
  std::vector<double> rho;                  // limiting rho_j
  std::vector<std::vector<double>> beta;    // beta_{i,j} under beta_convention
  std::vector<std::vector<std::size_t>> feeding_servers;  // I_j
  std::vector<std::vector<std::size_t>> fed_clients;      // J_i
  std::vector<double> mu;
  BetaConvention beta_convention = BetaConvention::unit_sum;

  std::size_t servers() const noexcept { return alpha.size(); }
  std::size_t clients() const noexcept { return rho.size(); }
  std::size_t bottleneck() const noexcept { return rho.size() - 1; }
  bool feeds(std::size_t i, std::size_t j) const noexcept { return lambda[i][j] > 0.0; }
};

// Arrival rate into each client divided by its service rate, for arbitrary
// server shares (N_i/N or a limiting alpha).
std::vector<double> traffic_intensity(const std::vector<std::vector<double>>& lambda,
                                      const std::vector<double>& shares, const std::vector<double>& mu);

// Requires a structurally valid spec (dimensions and rates); throws
// std::invalid_argument otherwise.
DerivedParams derive(const NetworkSpec& spec);

enum class Regime { single_server, same_hubs, disjoint, critical, general, bottleneck };

const char* to_string(Regime c) noexcept;

struct TopologyReport {
  // Each component lists its servers and clients.
  struct Component {
    std::vector<std::size_t> servers;
    std::vector<std::size_t> clients;
  };
  std::vector<Component> components;
  std::vector<std::size_t> bottleneck_ids;
  std::vector<bool> shares_hub_with_bottleneck;
  std::vector<Regime> regime;
};

TopologyReport classify(const NetworkSpec& spec, const DerivedParams& params);

// Moves the unique client with rho_j >= 1 to the last position. Specs with
// zero or several such stations are returned unchanged.
NetworkSpec normalize_order(const NetworkSpec& spec);

}  // namespace cqn
