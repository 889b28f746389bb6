#pragma once

#include <span>
#include <utility>
#include <vector>

namespace cqn {

// Right-continuous piecewise-constant path: value values[n] on
// [times[n], times[n+1]), with times[0] == 0 and values[0] == 0.
class StepPath {
 public:
  StepPath();  // X == 0
  StepPath(std::vector<double> times, std::vector<double> values);

  // Builds a path from (epoch, jump) pairs in nondecreasing epoch order.
  // Jumps sharing an epoch are merged into one; zero-time jumps are not
  // allowed because X(0) must be 0.
  static StepPath from_jumps(std::span<const std::pair<double, double>> jumps);

  double at(double t) const;
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t pieces() const noexcept { return times_.size(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

// Regulator Psi_t(X) = -inf_{s<=t} X(s), which is >= 0 since X(0) = 0.
double psi(const StepPath& path, double t);

// Reflected value Phi_t(X) = X(t) + Psi_t(X).
double phi(const StepPath& path, double t);

struct Reflection {
  StepPath reflected;  // Phi(X), same epochs as X
  StepPath regulator;  // Psi(X), same epochs as X
};

// One left-to-right pass over the epochs.
Reflection reflect_with_regulator(const StepPath& path);
StepPath reflect(const StepPath& path);

}  // namespace cqn
