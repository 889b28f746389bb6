#include "cqn/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqn {

StepPath::StepPath() : times_{0.0}, values_{0.0} {}

StepPath::StepPath(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size())
    throw std::invalid_argument("step path needs matching, nonempty time and value arrays");
  if (times_.front() != 0.0) throw std::invalid_argument("step path must start at time 0");
  if (values_.front() != 0.0) throw std::invalid_argument("step path must satisfy X(0) = 0");
  for (std::size_t n = 1; n < times_.size(); ++n)
    if (!(times_[n] > times_[n - 1])) throw std::invalid_argument("step path epochs must be strictly increasing");
}

StepPath StepPath::from_jumps(std::span<const std::pair<double, double>> jumps) {
  std::vector<double> times{0.0};
  std::vector<double> values{0.0};
  double level = 0.0;
  for (const auto& [epoch, size] : jumps) {
    if (!(epoch > 0.0)) throw std::invalid_argument("jumps must occur after time 0");
    if (epoch < times.back()) throw std::invalid_argument("jumps must be in nondecreasing time order");
    level += size;
    if (epoch == times.back()) {
      values.back() = level;
    } else {
      times.push_back(epoch);
      values.push_back(level);
    }
  }
  return StepPath(std::move(times), std::move(values));
}

double StepPath::at(double t) const {
  if (t < 0.0) throw std::domain_error("time must be nonnegative");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double psi(const StepPath& path, double t) {
  if (t < 0.0) throw std::domain_error("time must be nonnegative");
  // The infimum of a step path over [0, t] is attained at a piece start.
  double low = 0.0;
  const auto& times = path.times();
  const auto& values = path.values();
  for (std::size_t n = 0; n < times.size() && times[n] <= t; ++n) low = std::min(low, values[n]);
  return -low;
}

double phi(const StepPath& path, double t) { return path.at(t) + psi(path, t); }

Reflection reflect_with_regulator(const StepPath& path) {
  const auto& values = path.values();
  std::vector<double> reflected(values.size());
  std::vector<double> regulator(values.size());
  double low = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) {
    low = std::min(low, values[n]);
    regulator[n] = -low;
    reflected[n] = values[n] - low;
  }
  return {StepPath(path.times(), std::move(reflected)), StepPath(path.times(), std::move(regulator))};
}

StepPath reflect(const StepPath& path) { return reflect_with_regulator(path).reflected; }

}  // namespace cqn
