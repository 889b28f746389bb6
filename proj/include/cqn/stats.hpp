#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cqn/des.hpp"
#include "cqn/fluid.hpp"

namespace cqn {

// Empirical law of a queue length over replications; pmf[l] for l <= L
// plus the mass beyond L.
struct DistEstimate {
  std::size_t station = 0;
  double time = 0.0;
  std::vector<double> pmf;
  std::vector<double> std_error;  // sqrt(p (1 - p) / n)
  double tail = 0.0;
  std::size_t n_reps = 0;

  // pmf followed by the tail bin.
  std::vector<double> closed() const;
};

// Law of Q_j just before the last departure opportunity at or before t.
using PreDepartureEstimate = DistEstimate;

// lhs[l] estimates the integral over [0, t] of rho_j(s) P{Q_j(s) = l};
// rhs[l] the integral of P{Q_j[S*_j(s)] = l + 1}.
struct IntegralEstimate {
  std::size_t station = 0;
  double horizon = 0.0;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> lhs_error;
  std::vector<double> rhs_error;
  std::vector<double> diff_error;  // stderr of the per-replication lhs - rhs
  std::size_t n_reps = 0;
};

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Index of t in the sample grid; std::domain_error if absent.
std::size_t grid_index(const Trajectory& trajectory, double t);

// Per-replication pieces, for folding replications in batches.

// Q_j(epoch-) at the last epoch <= t, or 0 without one.
std::int32_t predeparture_value(const Trajectory& trajectory, std::size_t j, double t);

struct IntegralSample {
  std::vector<double> lhs;
  std::vector<double> rhs;
};

IntegralSample integral_sample(const Trajectory& trajectory, std::size_t j, double t, int levels,
                               const std::function<double(double)>& rho_antiderivative);

DistEstimate tabulate(std::size_t j, double t, int levels, std::span<const std::int32_t> values);
IntegralEstimate combine(std::size_t j, double t, std::span<const IntegralSample> samples);
MeanEstimate mean_and_error(std::span<const double> xs);

DistEstimate pmf_at(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels);

// Needs pre-departure records for station j. No epoch in [0, t] counts as
// Q_j = 0.
PreDepartureEstimate predeparture_pmf_at(std::span<const Trajectory> trajectories, std::size_t j, double t,
                                         int levels);

// Exact piecewise-constant integration along each path. rho_antiderivative
// maps s to the integral of rho_j over [0, s]. Needs queue paths and
// pre-departure records for station j.
IntegralEstimate integral_relation(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels,
                                    const std::function<double(double)>& rho_antiderivative);

IntegralEstimate integral_relation(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels,
                                    const FluidModel& model);

// Mean over replications of Sigma_i(t) / N.
MeanEstimate server_fraction(std::span<const Trajectory> trajectories, std::size_t i, double t, double units);

// Half the L1 distance; inputs must have equal length (tail bins included).
double tv_distance(std::span<const double> p, std::span<const double> q);

// (1 - rho) rho^l for l <= L followed by the tail rho^(L+1).
std::vector<double> geometric_pmf(double rho, int levels);

struct InvarianceReport {
  std::size_t station = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  double tv = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

InvarianceReport time_invariance_check(std::span<const Trajectory> trajectories, std::size_t j, double t1, double t2,
                                       int levels, double threshold = 0.03);

}  // namespace cqn
