#include "cqn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqn {

std::vector<double> DistEstimate::closed() const {
  std::vector<double> out = pmf;
  out.push_back(tail);
  return out;
}

std::size_t grid_index(const Trajectory& trajectory, double t) {
  const auto& grid = trajectory.grid;
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (std::abs(grid[g] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return g;
  throw std::domain_error("time " + std::to_string(t) + " is not on the sample grid");
}

namespace {

void require_nonempty(std::span<const Trajectory> trajectories, std::size_t j) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories");
  if (j >= trajectories.front().clients) throw std::out_of_range("client station index out of range");
}

const StationTrace& trace_with_records(const Trajectory& tr, std::size_t j) {
  const auto& st = tr.stations.at(j);
  if (tr.epochs[j] > 0 && st.predeparture.empty())
    throw std::invalid_argument("pre-departure records were not kept for client " + std::to_string(j + 1));
  return st;
}

std::int32_t last_record(const StationTrace& st, double t) {
  const auto& recs = st.predeparture;
  const auto it = std::upper_bound(recs.begin(), recs.end(), t,
                                   [](double x, const PreDeparture& p) { return x < p.epoch; });
  return it == recs.begin() ? 0 : std::prev(it)->queue;
}

}  // namespace

DistEstimate tabulate(std::size_t j, double t, int levels, std::span<const std::int32_t> values) {
  DistEstimate d;
  d.station = j;
  d.time = t;
  d.n_reps = values.size();
  const auto bins = static_cast<std::size_t>(levels) + 1;
  std::vector<std::size_t> counts(bins, 0);
  std::size_t beyond = 0;
  for (auto v : values) {
    if (v >= 0 && static_cast<std::size_t>(v) < bins)
      ++counts[static_cast<std::size_t>(v)];
    else
      ++beyond;
  }
  const double n = static_cast<double>(values.size());
  d.pmf.resize(bins);
  d.std_error.resize(bins);
  for (std::size_t l = 0; l < bins; ++l) {
    d.pmf[l] = static_cast<double>(counts[l]) / n;
    d.std_error[l] = std::sqrt(d.pmf[l] * (1.0 - d.pmf[l]) / n);
  }
  d.tail = static_cast<double>(beyond) / n;
  return d;
}

MeanEstimate mean_and_error(std::span<const double> xs) {
  MeanEstimate m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

std::int32_t predeparture_value(const Trajectory& trajectory, std::size_t j, double t) {
  if (j >= trajectory.clients) throw std::out_of_range("client station index out of range");
  if (t > trajectory.horizon) throw std::domain_error("time beyond the simulated horizon");
  return last_record(trace_with_records(trajectory, j), t);
}

DistEstimate pmf_at(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels) {
  require_nonempty(trajectories, j);
  std::vector<std::int32_t> values;
  values.reserve(trajectories.size());
  for (const auto& tr : trajectories) values.push_back(tr.queue_at(grid_index(tr, t), j));
  return tabulate(j, t, levels, values);
}

PreDepartureEstimate predeparture_pmf_at(std::span<const Trajectory> trajectories, std::size_t j, double t,
                                         int levels) {
  require_nonempty(trajectories, j);
  std::vector<std::int32_t> values;
  values.reserve(trajectories.size());
  for (const auto& tr : trajectories) values.push_back(predeparture_value(tr, j, t));
  return tabulate(j, t, levels, values);
}

IntegralSample integral_sample(const Trajectory& tr, std::size_t j, double t, int levels,
                               const std::function<double(double)>& rho_antiderivative) {
  if (j >= tr.clients) throw std::out_of_range("client station index out of range");
  if (t > tr.horizon) throw std::domain_error("time beyond the simulated horizon");
  const auto& st = trace_with_records(tr, j);
  if (tr.arrivals[j] > 0 && st.queue_path.empty())
    throw std::invalid_argument("queue paths were not kept for client " + std::to_string(j + 1));
  const auto bins = static_cast<std::size_t>(levels) + 1;
  IntegralSample out{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};

  // Q_j(s) on [start, end) is value.
  double start = 0.0;
  std::int32_t value = 0;
  auto close_queue_piece = [&](double end) {
    end = std::min(end, t);
    if (end > start && value >= 0 && static_cast<std::size_t>(value) < bins)
      out.lhs[static_cast<std::size_t>(value)] += rho_antiderivative(end) - rho_antiderivative(start);
  };
  for (const auto& p : st.queue_path) {
    if (p.time >= t) break;
    close_queue_piece(p.time);
    start = p.time;
    value = p.value;
  }
  close_queue_piece(t);

  // Q_j[S*_j(s)] is 0 before the first epoch and Q_j(sigma_n-) on [sigma_n, sigma_{n+1}).
  start = 0.0;
  value = 0;
  auto close_record_piece = [&](double end) {
    end = std::min(end, t);
    if (end > start && value >= 1 && static_cast<std::size_t>(value) <= bins)
      out.rhs[static_cast<std::size_t>(value) - 1] += end - start;
  };
  for (const auto& rec : st.predeparture) {
    if (rec.epoch > t) break;
    close_record_piece(rec.epoch);
    start = rec.epoch;
    value = rec.queue;
  }
  close_record_piece(t);
  return out;
}

IntegralEstimate combine(std::size_t j, double t, std::span<const IntegralSample> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  const std::size_t bins = samples.front().lhs.size();
  const std::size_t reps = samples.size();
  IntegralEstimate out;
  out.station = j;
  out.horizon = t;
  out.n_reps = reps;
  std::vector<double> a(reps), b(reps), diff(reps);
  for (std::size_t l = 0; l < bins; ++l) {
    for (std::size_t m = 0; m < reps; ++m) {
      a[m] = samples[m].lhs.at(l);
      b[m] = samples[m].rhs.at(l);
      diff[m] = a[m] - b[m];
    }
    const auto ea = mean_and_error(a);
    const auto eb = mean_and_error(b);
    out.lhs.push_back(ea.mean);
    out.rhs.push_back(eb.mean);
    out.lhs_error.push_back(ea.std_error);
    out.rhs_error.push_back(eb.std_error);
    out.diff_error.push_back(mean_and_error(diff).std_error);
  }
  return out;
}

IntegralEstimate integral_relation(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels,
                                    const std::function<double(double)>& rho_antiderivative) {
  require_nonempty(trajectories, j);
  std::vector<IntegralSample> samples;
  samples.reserve(trajectories.size());
  for (const auto& tr : trajectories) samples.push_back(integral_sample(tr, j, t, levels, rho_antiderivative));
  return combine(j, t, samples);
}

IntegralEstimate integral_relation(std::span<const Trajectory> trajectories, std::size_t j, double t, int levels,
                                    const FluidModel& model) {
  return integral_relation(trajectories, j, t, levels, [&](double s) { return model.rho_integral(j, s); });
}

MeanEstimate server_fraction(std::span<const Trajectory> trajectories, std::size_t i, double t, double units) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories");
  std::vector<double> xs;
  xs.reserve(trajectories.size());
  for (const auto& tr : trajectories) xs.push_back(tr.server_at(grid_index(tr, t), i) / units);
  return mean_and_error(xs);
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("pmfs must have equal support length");
  double sum = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) sum += std::abs(p[l] - q[l]);
  return 0.5 * sum;
}

std::vector<double> geometric_pmf(double rho, int levels) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("geometric parameter must lie in [0, 1)");
  std::vector<double> out;
  double power = 1.0;
  for (int l = 0; l <= levels; ++l) {
    out.push_back((1.0 - rho) * power);
    power *= rho;
  }
  out.push_back(power);
  return out;
}

InvarianceReport time_invariance_check(std::span<const Trajectory> trajectories, std::size_t j, double t1, double t2,
                                       int levels, double threshold) {
  if (!(t1 < t2)) throw std::invalid_argument("t1 must precede t2");
  const auto a = pmf_at(trajectories, j, t1, levels).closed();
  const auto b = pmf_at(trajectories, j, t2, levels).closed();
  InvarianceReport r;
  r.station = j;
  r.t1 = t1;
  r.t2 = t2;
  r.tv = tv_distance(a, b);
  r.threshold = threshold;
  r.pass = r.tv <= threshold;
  return r;
}

}  // namespace cqn
