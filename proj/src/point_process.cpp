#include "cqn/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linalg.hpp"

namespace cqn {

const char* to_string(DepartureKind kind) noexcept {
  switch (kind) {
    case DepartureKind::poisson:
      return "poisson";
    case DepartureKind::gamma:
      return "gamma";
    case DepartureKind::deterministic:
      return "deterministic";
    case DepartureKind::markov_modulated:
      return "markov_modulated";
  }
  return "unknown";
}

std::optional<DepartureKind> departure_kind_from_string(const std::string& name) {
  if (name == "poisson") return DepartureKind::poisson;
  if (name == "gamma" || name == "renewal_gamma") return DepartureKind::gamma;
  if (name == "deterministic" || name == "renewal_deterministic") return DepartureKind::deterministic;
  if (name == "markov_modulated") return DepartureKind::markov_modulated;
  return std::nullopt;
}

std::vector<std::string> check_law(const DepartureLaw& law) {
  std::vector<std::string> problems;
  if (law.kind == DepartureKind::gamma && !(law.shape > 0.0 && std::isfinite(law.shape)))
    problems.emplace_back("gamma shape must be positive");
  if (law.kind != DepartureKind::markov_modulated) return problems;

  const std::size_t n = law.phase_rates.size();
  if (n == 0) problems.emplace_back("markov_modulated needs at least one phase");
  for (double r : law.phase_rates)
    if (!(r > 0.0 && std::isfinite(r))) problems.emplace_back("phase rates must be positive");
  if (law.transition.size() != n) {
    problems.emplace_back("transition matrix must be square with one row per phase");
    return problems;
  }
  for (const auto& row : law.transition) {
    if (row.size() != n) {
      problems.emplace_back("transition matrix must be square with one row per phase");
      return problems;
    }
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) problems.emplace_back("transition probabilities must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) problems.emplace_back("transition rows must sum to 1");
  }
  if (problems.empty()) {
    try {
      stationary_distribution(law.transition);
    } catch (const std::invalid_argument&) {
      problems.emplace_back("transition matrix has no unique stationary distribution");
    }
  }
  return problems;
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& transition) {
  const std::size_t n = transition.size();
  if (n == 0) throw std::invalid_argument("empty transition matrix");
  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  detail::Matrix a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t r = 0; r + 1 < n; ++r)
    for (std::size_t c = 0; c < n; ++c) a[r][c] = transition[c][r] - (r == c ? 1.0 : 0.0);
  for (std::size_t c = 0; c < n; ++c) a[n - 1][c] = 1.0;
  b[n - 1] = 1.0;
  auto pi = detail::solve(std::move(a), std::move(b));
  if (!pi) throw std::invalid_argument("stationary distribution is not unique");
  for (double& p : *pi) {
    if (p < -1e-10) throw std::invalid_argument("stationary distribution is not unique");
    p = std::max(p, 0.0);
  }
  return *pi;
}

double asymptotic_dispersion(const DepartureLaw& law) {
  switch (law.kind) {
    case DepartureKind::poisson:
      return 1.0;
    case DepartureKind::gamma:
      return 1.0 / law.shape;
    case DepartureKind::deterministic:
      return 0.0;
    case DepartureKind::markov_modulated:
      break;
  }
  const auto& p = law.transition;
  const std::size_t n = p.size();
  const auto pi = stationary_distribution(p);
  std::vector<double> m(n);
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    m[s] = 1.0 / law.phase_rates[s];
    mean += pi[s] * m[s];
    second += pi[s] * 2.0 * m[s] * m[s];
  }
  std::vector<double> d(n);
  for (std::size_t s = 0; s < n; ++s) d[s] = m[s] - mean;

  // Fundamental matrix Z = (I - P + 1 pi)^{-1}; sum_{n>=1} P^n d = (Z - I) d.
  detail::Matrix a(n, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) a[r][c] = (r == c ? 1.0 : 0.0) - p[r][c] + pi[c];
  auto zd = detail::solve(std::move(a), d);
  if (!zd) throw std::invalid_argument("fundamental matrix is singular");
  double cov = 0.0;
  for (std::size_t s = 0; s < n; ++s) cov += pi[s] * d[s] * ((*zd)[s] - d[s]);
  const double variance = second - mean * mean + 2.0 * cov;
  return variance / (mean * mean);
}

EpochStream::EpochStream(const PointProcessSpec& spec, std::uint64_t seed) : law_(spec.law), rng_(seed) {
  if (!(spec.mean > 0.0 && std::isfinite(spec.mean)))
    throw std::invalid_argument("point process mean must be positive");
  if (auto problems = check_law(law_); !problems.empty()) throw std::invalid_argument(problems.front());

  switch (law_.kind) {
    case DepartureKind::poisson:
    case DepartureKind::deterministic:
      scale_ = spec.mean;
      break;
    case DepartureKind::gamma:
      scale_ = spec.mean / law_.shape;
      break;
    case DepartureKind::markov_modulated: {
      const auto pi = stationary_distribution(law_.transition);
      double unit_mean = 0.0;
      for (std::size_t s = 0; s < pi.size(); ++s) unit_mean += pi[s] / law_.phase_rates[s];
      scale_ = spec.mean / unit_mean;
      phase_rates_ = law_.phase_rates;
      cumulative_.resize(law_.transition.size());
      for (std::size_t s = 0; s < law_.transition.size(); ++s) {
        double acc = 0.0;
        for (double q : law_.transition[s]) cumulative_[s].push_back(acc += q);
      }
      // Initial phase from the stationary law makes {xi} strictly stationary.
      const double u = rng_.uniform();
      double acc = 0.0;
      phase_ = pi.size() - 1;
      for (std::size_t s = 0; s < pi.size(); ++s) {
        acc += pi[s];
        if (u < acc) {
          phase_ = s;
          break;
        }
      }
      break;
    }
  }
  next_ = draw();
}

double EpochStream::draw() {
  ++drawn_;
  double xi = 0.0;
  switch (law_.kind) {
    case DepartureKind::poisson:
      xi = rng_.exponential(1.0);
      break;
    case DepartureKind::deterministic:
      // n m rather than a running sum, which drifts off the lattice.
      return static_cast<double>(drawn_) * scale_;
    case DepartureKind::gamma:
      xi = rng_.gamma(law_.shape);
      break;
    case DepartureKind::markov_modulated: {
      xi = rng_.exponential(phase_rates_[phase_]);
      const double u = rng_.uniform();
      const auto& row = cumulative_[phase_];
      std::size_t s = 0;
      while (s + 1 < row.size() && u >= row[s]) ++s;
      phase_ = s;
      break;
    }
  }
  const double epoch = next_ + xi * scale_;
  // A zero draw would give a repeated epoch; step to the next representable time.
  return epoch > next_ ? epoch : std::nextafter(next_, HUGE_VAL);
}

double EpochStream::advance() {
  const double epoch = next_;
  last_ = epoch;
  ++consumed_;
  next_ = draw();
  return epoch;
}

std::optional<double> EpochStream::last_before(double t) {
  if (t < 0.0) throw std::domain_error("time must be nonnegative");
  if (t < query_) throw std::domain_error("last_before queries must be non-decreasing");
  query_ = t;
  while (next_ <= t) advance();
  return last_;
}

std::uint64_t EpochStream::count_until(double t) {
  last_before(t);
  return consumed_;
}

double empirical_rate(EpochStream& stream, double t, double units) {
  return static_cast<double>(stream.count_until(t)) / units;
}

}  // namespace cqn
