#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cqn/rng.hpp"

namespace cqn {

enum class DepartureKind { poisson, gamma, deterministic, markov_modulated };

const char* to_string(DepartureKind kind) noexcept;
std::optional<DepartureKind> departure_kind_from_string(const std::string& name);

// Shape of the inter-epoch law of a client station, without its time scale.
// For markov_modulated, phase_rates are relative rates of the exponential
// inter-epoch time in each phase and transition[p][q] is the probability of
// moving from phase p to phase q after an epoch.
struct DepartureLaw {
  DepartureKind kind = DepartureKind::poisson;
  double shape = 1.0;
  std::vector<double> phase_rates;
  std::vector<std::vector<double>> transition;

  bool operator==(const DepartureLaw&) const = default;
};

// Returns a message per invalid parameter; empty when the law is usable.
std::vector<std::string> check_law(const DepartureLaw& law);

struct PointProcessSpec {
  DepartureLaw law;
  double mean = 1.0;  // mean inter-epoch time
};

// Stationary distribution of a row-stochastic matrix. Throws
// std::invalid_argument when it is not unique.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& transition);

// lim n^{-1} Var(xi_1 + ... + xi_n) / E[xi]^2: the squared coefficient of
// the renewal-type CLT for the counting process. 1 for Poisson, 1/shape for
// gamma, 0 for deterministic.
double asymptotic_dispersion(const DepartureLaw& law);

// Lazily generated epochs sigma_1 < sigma_2 < ... of one client station.
class EpochStream {
 public:
  EpochStream(const PointProcessSpec& spec, std::uint64_t seed);

  double peek() const noexcept { return next_; }
  // Consumes and returns the next epoch.
  double advance();
  std::uint64_t consumed() const noexcept { return consumed_; }

  // Largest epoch <= t (S*(t)), consuming epochs up to t. Queries must be
  // non-decreasing in t; nullopt when no epoch lies in [0, t].
  std::optional<double> last_before(double t);

  // Number of epochs in [0, t] (S(t)), consuming epochs up to t.
  std::uint64_t count_until(double t);

 private:
  double draw();

  DepartureLaw law_;
  double scale_ = 1.0;  // time multiplier applied to the unit-free variate
  std::vector<double> phase_rates_;
  std::vector<std::vector<double>> cumulative_;
  std::size_t phase_ = 0;
  Xoshiro256 rng_;
  double next_ = 0.0;
  std::optional<double> last_;
  double query_ = 0.0;
  std::uint64_t consumed_ = 0;
  std::uint64_t drawn_ = 0;
};

// S(t) / N.
double empirical_rate(EpochStream& stream, double t, double units);

}  // namespace cqn
