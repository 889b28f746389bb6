#pragma once

#include <span>
#include <vector>

#include "cqn/net_model.hpp"

namespace cqn {

// Closed-form fluid limits sampled on a time grid. Client index j runs over
// all k stations for x_star; rho_t covers the k-1 non-bottleneck stations.
struct FluidCurves {
  std::vector<double> grid;
  std::vector<double> q;
  std::vector<double> int_q;
  std::vector<std::vector<double>> x_star;                     // [j][g]
  std::vector<std::vector<std::vector<double>>> x_star_class;  // [i][j][g]
  std::vector<std::vector<double>> rho_t;                      // [j][g], j < k-1
  std::vector<std::vector<double>> occupancy;                  // [i][g], fraction of N
};

// Evaluates the bottleneck fluid queue q(t) = (1 - 1/rho_k)(1 - exp(-rho_k mu_k t))
// and the quantities built from it. Construction fails with
// std::domain_error when rho_k < 1.
class FluidModel {
 public:
  explicit FluidModel(DerivedParams params);

  const DerivedParams& params() const noexcept { return params_; }
  bool critical() const noexcept { return limit_ == 0.0; }

  double q(double t) const;
  double int_q(double t) const;

  // sum over i in I_j and I_k of beta_{i,j} beta_{i,k}
  double coupling(std::size_t j) const;

  // rho_j(t) = rho_j [1 - q(t) coupling(j)], j < k-1.
  double rho(std::size_t j, double t) const;
  // Integral of rho_j over [0, t], exact.
  double rho_integral(std::size_t j, double t) const;

  // alpha_i off the bottleneck hub, alpha_i [1 - q(t) beta_{i,k}] on it.
  double occupancy(std::size_t i, double t) const;

  FluidCurves curves(std::span<const double> grid) const;

 private:
  void require_time(double t) const;
  void require_client(std::size_t j) const;
  double class_share(std::size_t i, std::size_t j, double t) const;

  DerivedParams params_;
  double rate_ = 0.0;   // rho_k mu_k
  double limit_ = 0.0;  // 1 - 1/rho_k
};

// Result of integrating the reflected class-level fluid system by explicit
// Euler with projection onto the nonnegative orthant.
struct NumericFluid {
  double step = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<double>> station;                // [j][g], reflected totals
  std::vector<std::vector<std::vector<double>>> class_in;  // [i][j][g]
  std::vector<std::vector<double>> occupancy;              // [i][g]
  std::vector<std::vector<double>> intensity;              // [j][g], arrival rate / mu_j
};

// Uniform grid 0, h, 2h, ... up to t_max. Throws std::domain_error for h <= 0.
NumericFluid solve_fluid_numeric(const DerivedParams& params, double step, double t_max);

}  // namespace cqn
