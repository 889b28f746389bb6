#include "cqn/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace cqn {

FluidModel::FluidModel(DerivedParams params) : params_(std::move(params)) {
  const std::size_t b = params_.bottleneck();
  const double rho_k = params_.rho[b];
  if (rho_k < 1.0 - kCriticalTolerance) throw std::domain_error("no bottleneck: rho_k < 1");
  rate_ = rho_k * params_.mu[b];
  limit_ = std::abs(rho_k - 1.0) <= kCriticalTolerance ? 0.0 : 1.0 - 1.0 / rho_k;
}

void FluidModel::require_time(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("time must be nonnegative");
}

void FluidModel::require_client(std::size_t j) const {
  if (j >= params_.bottleneck()) throw std::domain_error("rho_j(t) is defined for non-bottleneck stations only");
}

double FluidModel::q(double t) const {
  require_time(t);
  return limit_ * -std::expm1(-rate_ * t);
}

double FluidModel::int_q(double t) const {
  require_time(t);
  // (1 - 1/rho_k) [t - (1 - e^{-a t}) / a] with a = rho_k mu_k, written as
  // (x + expm1(-x)) / a; the series avoids cancellation for small x.
  const double x = rate_ * t;
  double core;
  if (x < 1e-3) {
    core = x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
  } else {
    core = x + std::expm1(-x);
  }
  return limit_ * core / rate_;
}

double FluidModel::coupling(std::size_t j) const {
  const std::size_t b = params_.bottleneck();
  double sum = 0.0;
  for (std::size_t i : params_.feeding_servers[j])
    if (params_.feeds(i, b)) sum += params_.beta[i][j] * params_.beta[i][b];
  return sum;
}

double FluidModel::rho(std::size_t j, double t) const {
  require_client(j);
  return params_.rho[j] * (1.0 - q(t) * coupling(j));
}

double FluidModel::rho_integral(std::size_t j, double t) const {
  require_client(j);
  return params_.rho[j] * (t - coupling(j) * int_q(t));
}

double FluidModel::occupancy(std::size_t i, double t) const {
  const std::size_t b = params_.bottleneck();
  if (!params_.feeds(i, b)) return params_.alpha[i];
  return params_.alpha[i] * (1.0 - q(t) * params_.beta[i][b]);
}

// Limiting fraction of the arrival rate into client j that comes from
// server i, with indicator 1 when i also feeds the bottleneck.
double FluidModel::class_share(std::size_t i, std::size_t j, double t) const {
  const std::size_t b = params_.bottleneck();
  const double qt = q(t);
  auto weight = [&](std::size_t l, double level) {
    const double on_hub = params_.feeds(l, b) ? 1.0 : 0.0;
    return params_.lambda[l][j] * params_.alpha[l] * (1.0 - on_hub * (1.0 - level));
  };
  double total = 0.0;
  for (std::size_t l : params_.feeding_servers[j]) total += weight(l, qt);
  if (total > 0.0) return weight(i, qt) / total;
  // Every feeder is on the hub and q(t) = 0: take the t -> 0+ limit.
  double hub_total = 0.0;
  for (std::size_t l : params_.feeding_servers[j]) hub_total += params_.lambda[l][j] * params_.alpha[l];
  return hub_total > 0.0 ? params_.lambda[i][j] * params_.alpha[i] / hub_total : 0.0;
}

namespace {

// Simpson on [a, b], splitting while the endpoint values differ by more
// than 1% relative.
double refined_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fb, int depth) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double scale = std::max(std::abs(fa), std::abs(fb));
  if (depth > 0 && std::abs(fa - fb) > 0.01 * scale && b - a > 1e-12) {
    return refined_simpson(f, a, m, fa, fm, depth - 1) + refined_simpson(f, m, b, fm, fb, depth - 1);
  }
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

std::vector<double> cumulative_integral(const std::function<double(double)>& f, std::span<const double> grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (grid.empty()) return out;
  // Integrate from 0 to the first grid point as well.
  double fa = f(0.0);
  double prev = 0.0;
  double acc = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double fb = f(grid[g]);
    if (grid[g] > prev) acc += refined_simpson(f, prev, grid[g], fa, fb, 24);
    out[g] = acc;
    prev = grid[g];
    fa = fb;
  }
  return out;
}

}  // namespace

FluidCurves FluidModel::curves(std::span<const double> grid) const {
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] >= 0.0)) throw std::domain_error("grid times must be nonnegative");
    if (g > 0 && grid[g] < grid[g - 1]) throw std::domain_error("grid must be sorted");
  }
  const std::size_t r = params_.servers();
  const std::size_t k = params_.clients();
  const std::size_t b = params_.bottleneck();
  const std::size_t n = grid.size();

  FluidCurves c;
  c.grid.assign(grid.begin(), grid.end());
  c.q.resize(n);
  c.int_q.resize(n);
  for (std::size_t g = 0; g < n; ++g) {
    c.q[g] = q(grid[g]);
    c.int_q[g] = int_q(grid[g]);
  }

  c.x_star.assign(k, std::vector<double>(n, 0.0));
  c.x_star_class.assign(r, std::vector<std::vector<double>>(k, std::vector<double>(n, 0.0)));
  for (std::size_t i = 0; i < r; ++i) {
    if (params_.feeds(i, b))
      for (std::size_t g = 0; g < n; ++g) c.x_star_class[i][b][g] = params_.beta[i][b] * c.q[g];
  }
  c.x_star[b] = c.q;

  for (std::size_t j = 0; j < b; ++j) {
    double hub_weight = 0.0;  // sum over I_j and I_k of lambda_{i,j} alpha_i beta_{i,k}
    for (std::size_t i : params_.feeding_servers[j])
      if (params_.feeds(i, b)) hub_weight += params_.lambda[i][j] * params_.alpha[i] * params_.beta[i][b];
    const double drift = params_.rho[j] * params_.mu[j] - params_.mu[j];
    for (std::size_t g = 0; g < n; ++g) c.x_star[j][g] = drift * grid[g] - hub_weight * c.int_q[g];

    for (std::size_t i : params_.feeding_servers[j]) {
      const auto share = cumulative_integral([&](double s) { return class_share(i, j, s); }, grid);
      const double inflow = params_.lambda[i][j] * params_.alpha[i];
      const double hub = params_.feeds(i, b) ? inflow * params_.beta[i][b] : 0.0;
      for (std::size_t g = 0; g < n; ++g)
        c.x_star_class[i][j][g] = inflow * grid[g] - params_.mu[j] * share[g] - hub * c.int_q[g];
    }
  }

  c.rho_t.assign(b, std::vector<double>(n));
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t g = 0; g < n; ++g) c.rho_t[j][g] = rho(j, grid[g]);

  c.occupancy.assign(r, std::vector<double>(n));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t g = 0; g < n; ++g) c.occupancy[i][g] = occupancy(i, grid[g]);
  return c;
}

NumericFluid solve_fluid_numeric(const DerivedParams& params, double step, double t_max) {
  if (!(step > 0.0)) throw std::domain_error("step must be positive");
  if (!(t_max >= 0.0)) throw std::domain_error("horizon must be nonnegative");
  const std::size_t r = params.servers();
  const std::size_t k = params.clients();
  const auto steps = static_cast<std::size_t>(std::llround(t_max / step));

  NumericFluid out;
  out.step = step;
  out.grid.resize(steps + 1);
  out.station.assign(k, std::vector<double>(steps + 1, 0.0));
  out.class_in.assign(r, std::vector<std::vector<double>>(k, std::vector<double>(steps + 1, 0.0)));
  out.occupancy.assign(r, std::vector<double>(steps + 1, 0.0));
  out.intensity.assign(k, std::vector<double>(steps + 1, 0.0));

  std::vector<std::vector<double>> y(r, std::vector<double>(k, 0.0));
  std::vector<double> free(r);
  std::vector<double> inflow(r);

  auto record = [&](std::size_t n) {
    out.grid[n] = static_cast<double>(n) * step;
    for (std::size_t i = 0; i < r; ++i) {
      double held = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        out.class_in[i][j][n] = y[i][j];
        held += y[i][j];
      }
      free[i] = std::max(params.alpha[i] - held, 0.0);
      out.occupancy[i][n] = params.alpha[i] - held;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double total = 0.0;
      double rate = 0.0;
      for (std::size_t i = 0; i < r; ++i) {
        total += y[i][j];
        rate += params.lambda[i][j] * free[i];
      }
      out.station[j][n] = total;
      out.intensity[j][n] = rate / params.mu[j];
    }
  };

  record(0);
  for (std::size_t n = 1; n <= steps; ++n) {
    // free[] holds the server contents of the previous step.
    for (std::size_t j = 0; j < k; ++j) {
      double before = 0.0;
      double arriving = 0.0;
      for (std::size_t i = 0; i < r; ++i) {
        inflow[i] = step * params.lambda[i][j] * free[i];
        before += y[i][j];
        arriving += inflow[i];
      }
      const double loaded = before + arriving;
      const double after = std::max(loaded - step * params.mu[j], 0.0);
      const double keep = loaded > 0.0 ? after / loaded : 0.0;
      for (std::size_t i = 0; i < r; ++i) y[i][j] = (y[i][j] + inflow[i]) * keep;
    }
    record(n);
  }
  return out;
}

}  // namespace cqn
