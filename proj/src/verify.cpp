#include "cqn/verify.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cqn/commands.hpp"
#include "cqn/fluid.hpp"
#include "cqn/point_process.hpp"
#include "cqn/reflection.hpp"
#include "cqn/rng.hpp"
#include "cqn/scenarios.hpp"
#include "cqn/stats.hpp"
#include "json.hpp"

namespace cqn {

namespace fs = std::filesystem;
using nlohmann::json;

bool VerifyReport::all_pass() const {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

std::string VerifyReport::json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json row = {{"id", r.id},
                          {"name", r.name},
                          {"pass", r.pass},
                          {"value", r.value},
                          {"threshold", r.threshold},
                          {"margin", r.margin()},
                          {"detail", r.detail}};
    if (!r.diagnostics.empty()) row["diagnostics"] = nlohmann::json::parse(r.diagnostics);
    rows.push_back(row);
  }
  return nlohmann::json{{"all_pass", all_pass()}, {"criteria", rows}}.dump(2) + "\n";
}

namespace {

constexpr int kLevels = 10;
constexpr std::size_t kBatch = 16;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Monte Carlo tolerance: 4 standard errors plus a finite-N allowance.
double mc_bound(double std_error) { return 4.0 * std_error + 0.02; }

// Occupancy rows accumulate across scenarios 3 and 6.
struct OccupancyTally {
  double worst_ratio = 0.0;
  json rows = json::array();
  bool pass = true;

  void add(const std::string& scenario, std::size_t i, double t, const MeanEstimate& est, double fluid,
           double numeric) {
    const double bound = mc_bound(est.std_error);
    const double diff = std::abs(est.mean - fluid);
    worst_ratio = std::max(worst_ratio, diff / bound);
    pass = pass && diff <= bound;
    rows.push_back({{"scenario", scenario},
                    {"server", i + 1},
                    {"t", t},
                    {"mean", est.mean},
                    {"std_error", est.std_error},
                    {"fluid", fluid},
                    {"numeric_fluid", numeric},
                    {"bound", bound}});
  }
};

double numeric_at(const std::vector<double>& series, double step, double t) {
  return series.at(static_cast<std::size_t>(std::llround(t / step)));
}

class Suite {
 public:
  explicit Suite(const VerifyOptions& options) : opt_(options) {}

  VerifyReport run();

 private:
  ExperimentConfig scenario(const std::string& name) const {
    auto c = bundled_scenario(name);
    if (opt_.reps > 0) c.sim.reps = opt_.reps;
    if (opt_.seed) c.sim.seed = *opt_.seed;
    c.sim.threads = opt_.threads;
    return c;
  }

  void say(const std::string& msg) const {
    if (opt_.progress) opt_.progress(msg);
  }

  // Runs replications in batches; visit sees every full trajectory before
  // its event records are dropped. Crossing identities are tallied for
  // every replication the suite simulates.
  template <class Visit>
  std::vector<Trajectory> simulate(const std::string& label, const SimConfig& sim, std::size_t reps, Visit visit) {
    std::vector<Trajectory> kept;
    kept.reserve(reps);
    for (std::size_t first = 0; first < reps; first += kBatch) {
      auto batch = replicate_range(sim, first, std::min(kBatch, reps - first), opt_.threads);
      for (auto& tr : batch) {
        tally_crossings(label, tr);
        visit(tr);
        tr.stations.clear();
        kept.push_back(std::move(tr));
      }
    }
    say(label + ": " + std::to_string(reps) + " replications");
    return kept;
  }

  void tally_crossings(const std::string& label, const Trajectory& tr) {
    for (std::size_t j = 0; j < tr.clients; ++j)
      for (int l = 1; l <= tr.levels; ++l) {
        const auto up = tr.up[j][static_cast<std::size_t>(l - 1)];
        const auto down = tr.down[j][static_cast<std::size_t>(l)];
        const std::uint64_t above = tr.final_queue[j] >= l ? 1 : 0;
        ++crossing_checks_;
        if (up != down + above) {
          ++crossing_failures_;
          if (crossing_example_.empty())
            crossing_example_ = label + " rep " + std::to_string(tr.replication + 1) + " client " +
                                std::to_string(j + 1) + " level " + std::to_string(l);
        }
      }
    invariant_failures_ += tr.invariant_failures;
    scenarios_seen_.insert(label);
  }

  CriterionResult crossing_identity();
  CriterionResult reflection();
  void markov_single_path(CriterionResult& c3, CriterionResult& c4);
  void markov_replications(CriterionResult& c5);
  void shared_hub(CriterionResult& c6, CriterionResult& c7);
  CriterionResult disjoint_invariance();
  CriterionResult critical_regime();
  CriterionResult fluid_consistency();
  CriterionResult rate_law();
  CriterionResult determinism();
  void remaining_scenarios();

  const VerifyOptions& opt_;
  std::uint64_t crossing_checks_ = 0;
  std::uint64_t crossing_failures_ = 0;
  std::uint64_t invariant_failures_ = 0;
  std::string crossing_example_;
  std::set<std::string> scenarios_seen_;
  OccupancyTally occupancy_;
};

CriterionResult make(int id, const char* name, double value, double threshold, bool pass, std::string detail,
                     const json& diagnostics = json()) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  r.value = value;
  r.threshold = threshold;
  r.pass = pass;
  r.detail = std::move(detail);
  if (!diagnostics.is_null()) r.diagnostics = diagnostics.dump();
  return r;
}

CriterionResult Suite::crossing_identity() {
  std::string detail = std::to_string(crossing_checks_) + " checks over";
  for (const auto& l : scenarios_seen_) detail += " " + l;
  detail += "; " + std::to_string(crossing_failures_) + " failures";
  if (!crossing_example_.empty()) detail += " (first: " + crossing_example_ + ")";
  if (invariant_failures_ > 0) detail += "; " + std::to_string(invariant_failures_) + " conservation failures";
  const double value = static_cast<double>(crossing_failures_ + invariant_failures_);
  return make(1, "crossing identity", value, 0.0, value == 0.0 && crossing_checks_ > 0, detail);
}

CriterionResult Suite::reflection() {
  auto config = scenario("markov_one_server");
  config.network.units = {500};
  config.sim.reps = 20;
  auto sim = config.sim_config();
  sim.record.drivers = true;
  sim.record.predeparture = false;
  std::uint64_t compared = 0;
  std::uint64_t mismatches = 0;
  simulate("markov_one_server[N=500]", sim, 20, [&](const Trajectory& tr) {
    for (std::size_t j = 0; j < tr.clients; ++j) {
      const auto path = StepPath::from_jumps(tr.stations[j].driver);
      const auto replay = reflect(path);
      for (std::size_t g = 0; g < tr.grid.size(); ++g) {
        ++compared;
        if (replay.at(tr.grid[g]) != static_cast<double>(tr.queue_at(g, j))) ++mismatches;
      }
    }
  });
  return make(2, "reflection replay", static_cast<double>(mismatches), 0.0, mismatches == 0 && compared > 0,
              std::to_string(compared) + " grid values compared, " + std::to_string(mismatches) + " mismatches");
}

void Suite::markov_single_path(CriterionResult& c3, CriterionResult& c4) {
  const auto config = scenario("markov_one_server");
  auto sim = config.sim_config();
  sim.sample_grid = GridSpec{config.grid.t_max, 501}.times();
  sim.record.predeparture = false;
  const FluidModel model(derive(config.network));
  const double n = static_cast<double>(config.network.total_units());
  const auto path = simulate("markov_one_server", sim, 1, [](const Trajectory&) {});
  const auto& tr = path.front();
  double worst_bottleneck = 0.0;
  double worst_other = 0.0;
  double at3 = 0.0, at4 = 0.0;
  for (std::size_t g = 0; g < tr.grid.size(); ++g) {
    const double d = std::abs(tr.queue_at(g, 1) / n - model.q(tr.grid[g]));
    if (d > worst_bottleneck) {
      worst_bottleneck = d;
      at3 = tr.grid[g];
    }
    const double x = tr.queue_at(g, 0) / n;
    if (x > worst_other) {
      worst_other = x;
      at4 = tr.grid[g];
    }
  }
  c3 = make(3, "bottleneck fluid convergence", worst_bottleneck, 0.05, worst_bottleneck <= 0.05,
            "sup |Q_2/N - q| over 501 grid points, attained at t=" + fmt(at3));
  c4 = make(4, "non-bottleneck fluid nullity", worst_other, 0.02, worst_other <= 0.02,
            "sup Q_1/N over 501 grid points, attained at t=" + fmt(at4));
}

void Suite::markov_replications(CriterionResult& c5) {
  const auto config = scenario("markov_one_server");
  auto sim = config.sim_config();
  sim.record.predeparture = false;
  const auto params = derive(config.network);
  const FluidModel model(params);
  const auto numeric = solve_fluid_numeric(params, 1e-3, config.grid.t_max);
  const auto runs = simulate("markov_one_server", sim, config.sim.reps, [](const Trajectory&) {});

  const double t = 3.0;
  const double rho_t = opt_.rho_scale * model.rho(0, t);
  const auto est = pmf_at(runs, 0, t, kLevels);
  double tv = 1.0;
  if (rho_t < 1.0) tv = tv_distance(est.closed(), geometric_pmf(rho_t, kLevels));
  c5 = make(5, "geometric law, one-server Markov network", tv, 0.03, tv <= 0.03,
            "TV(P{Q_1(3)=l}, Geometric(" + fmt(rho_t) + ")) over " + std::to_string(runs.size()) + " replications",
            {{"pmf", est.closed()}, {"reference", rho_t < 1.0 ? json(geometric_pmf(rho_t, kLevels)) : json()}});

  const double n = static_cast<double>(config.network.total_units());
  for (double s : {1.0, 3.0, 5.0})
    for (std::size_t i = 0; i < params.servers(); ++i)
      occupancy_.add(config.name, i, s, server_fraction(runs, i, s, n), model.occupancy(i, s),
                      numeric_at(numeric.occupancy[i], numeric.step, s));
}

void Suite::shared_hub(CriterionResult& c6, CriterionResult& c7) {
  const auto config = scenario("shared_hub_erlang");
  auto sim = config.sim_config();
  const auto params = derive(config.network);
  const FluidModel model(params);
  const auto numeric = solve_fluid_numeric(params, 1e-3, config.grid.t_max);
  const std::size_t others = params.bottleneck();
  sim.record.predeparture = true;
  sim.record.queue_paths = true;
  sim.record.stations.assign(params.clients(), false);
  for (std::size_t j = 0; j < others; ++j) sim.record.stations[j] = true;

  const double t = 3.0;
  const int check_levels = 3;
  std::vector<std::vector<std::int32_t>> pre(others);
  std::vector<std::vector<IntegralSample>> integrals(others);
  const auto runs = simulate("shared_hub_erlang", sim, config.sim.reps, [&](const Trajectory& tr) {
    for (std::size_t j = 0; j < others; ++j) {
      pre[j].push_back(predeparture_value(tr, j, t));
      integrals[j].push_back(integral_sample(tr, j, t, kLevels, [&](double s) {
        return opt_.rho_scale * model.rho_integral(j, s);
      }));
    }
  });

  double worst6 = 0.0;
  bool pass6 = true;
  json rows6 = json::array();
  double worst7 = 0.0;
  bool pass7 = true;
  json rows7 = json::array();
  for (std::size_t j = 0; j < others; ++j) {
    const auto d = tabulate(j, t, kLevels, pre[j]);
    const double expected = 1.0 - opt_.rho_scale * model.rho(j, t);
    const double bound = mc_bound(d.std_error[0]);
    const double diff = std::abs(d.pmf[0] - expected);
    worst6 = std::max(worst6, diff / bound);
    pass6 = pass6 && diff <= bound;
    rows6.push_back({{"client", j + 1},
                     {"estimate", d.pmf[0]},
                     {"std_error", d.std_error[0]},
                     {"reference", expected},
                     {"numeric_fluid_reference", 1.0 - numeric_at(numeric.intensity[j], numeric.step, t)},
                     {"bound", bound}});

    const auto est = combine(j, t, integrals[j]);
    for (int l = 0; l <= check_levels; ++l) {
      const auto L = static_cast<std::size_t>(l);
      const double b = mc_bound(est.diff_error[L]);
      const double gap = std::abs(est.lhs[L] - est.rhs[L]);
      worst7 = std::max(worst7, gap / b);
      pass7 = pass7 && gap <= b;
      rows7.push_back({{"client", j + 1},
                       {"level", l},
                       {"lhs", est.lhs[L]},
                       {"rhs", est.rhs[L]},
                       {"diff_error", est.diff_error[L]},
                       {"bound", b}});
    }
  }
  c6 = make(6, "pre-departure emptiness law", worst6, 1.0, pass6,
            "max over non-bottleneck clients of |P{Q_j[S*_j(3)]=0} - (1 - rho_j(3))| / (4 stderr + 0.02)",
            {{"rows", rows6}});
  c7 = make(7, "integral relation", worst7, 1.0, pass7,
            "max over clients and levels 0..3 of |lhs - rhs| / (4 stderr + 0.02) at t=3", {{"rows", rows7}});

  const double n = static_cast<double>(config.network.total_units());
  for (double s : {1.0, 3.0, 5.0})
    for (std::size_t i = 0; i < params.servers(); ++i)
      occupancy_.add(config.name, i, s, server_fraction(runs, i, s, n), model.occupancy(i, s),
                      numeric_at(numeric.occupancy[i], numeric.step, s));
}

CriterionResult Suite::disjoint_invariance() {
  const auto config = scenario("disjoint_hub");
  const auto params = derive(config.network);
  const auto topo = classify(config.network, params);
  const std::size_t j = 1;
  const bool disjoint = topo.regime[j] == Regime::disjoint;
  auto sim = config.sim_config();
  sim.record.predeparture = false;
  const auto runs = simulate("disjoint_hub", sim, config.sim.reps, [](const Trajectory&) {});
  const auto rep = time_invariance_check(runs, j, 2.0, 5.0, kLevels);
  return make(8, "time invariance off the bottleneck hub", rep.tv, 0.03, disjoint && rep.pass,
              std::string("TV(P{Q_2(2)=l}, P{Q_2(5)=l}) over ") + std::to_string(runs.size()) +
                  " replications; client 2 regime " + to_string(topo.regime[j]),
              {{"pmf_t2", pmf_at(runs, j, 2.0, kLevels).closed()}, {"pmf_t5", pmf_at(runs, j, 5.0, kLevels).closed()}});
}

CriterionResult Suite::critical_regime() {
  const auto config = scenario("critical");
  const auto params = derive(config.network);
  const FluidModel model(params);
  bool exact = model.critical();
  for (double t : config.grid.times()) exact = exact && model.q(t) == 0.0 && model.int_q(t) == 0.0;

  auto sim = config.sim_config();
  sim.record.predeparture = false;
  const auto runs = simulate("critical", sim, config.sim.reps, [](const Trajectory&) {});
  double worst = 0.0;
  bool pass = exact;
  json rows = json::array();
  for (std::size_t j = 0; j < params.bottleneck(); ++j) {
    const auto rep = time_invariance_check(runs, j, 2.0, 5.0, kLevels);
    worst = std::max(worst, rep.tv);
    pass = pass && rep.pass;
    rows.push_back({{"client", j + 1}, {"tv", rep.tv}});
  }
  return make(9, "critical bottleneck", worst, 0.03, pass,
              std::string("q identically zero: ") + (exact ? "yes" : "no") +
                  "; max TV(P{Q_j(2)=l}, P{Q_j(5)=l}) over non-bottleneck clients",
              {{"rows", rows}});
}

CriterionResult Suite::fluid_consistency() {
  const auto config = scenario("markov_one_server");
  const auto params = derive(config.network);
  const FluidModel model(params);
  const std::size_t b = params.bottleneck();
  const double mu = params.mu[b];
  const double rho = params.rho[b];

  // q' = mu (rho - 1) - rho mu q, checked by central differences.
  const double h = 1e-5;
  double residual = 0.0;
  for (int n = 1; n <= 500; ++n) {
    const double t = 0.01 * n;
    const double dq = (model.q(t + h) - model.q(t - h)) / (2.0 * h);
    residual = std::max(residual, std::abs(dq - (mu * (rho - 1.0) - rho * mu * model.q(t))));
  }

  // Composite Simpson with 2000 panels.
  double quad_error = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const double t = 0.5 * n;
    const int panels = 2000;
    const double w = t / panels;
    double sum = model.q(0.0) + model.q(t);
    for (int m = 1; m < panels; ++m) sum += (m % 2 ? 4.0 : 2.0) * model.q(m * w);
    quad_error = std::max(quad_error, std::abs(sum * w / 3.0 - model.int_q(t)));
  }

  auto euler_error = [&](double step) {
    const auto num = solve_fluid_numeric(params, step, config.grid.t_max);
    double e = 0.0;
    for (std::size_t g = 0; g < num.grid.size(); ++g)
      e = std::max(e, std::abs(num.station[b][g] - model.q(num.grid[g])));
    return e;
  };
  const double coarse = euler_error(0.01);
  const double fine = euler_error(0.005);
  const double ratio = coarse / fine;

  const bool pass = residual <= 1e-8 && quad_error <= 1e-9 && ratio >= 1.5 && ratio <= 2.5;
  return make(11, "fluid engine self-consistency", residual, 1e-8, pass,
              "ODE residual " + fmt(residual) + " (<= 1e-8), int_q vs Simpson " + fmt(quad_error) +
                  " (<= 1e-9), Euler error ratio " + fmt(ratio) + " (in [1.5, 2.5])",
              {{"ode_residual", residual},
               {"quadrature_error", quad_error},
               {"euler_error_h", coarse},
               {"euler_error_h_half", fine},
               {"euler_ratio", ratio}});
}

CriterionResult Suite::rate_law() {
  const double n = 1e4;
  const double mu = 1.0;
  const double t = 1.0;
  const std::uint64_t base = opt_.seed.value_or(7312);
  std::vector<DepartureLaw> laws(4);
  laws[0].kind = DepartureKind::poisson;
  laws[1].kind = DepartureKind::gamma;
  laws[1].shape = 2.0;
  laws[2].kind = DepartureKind::deterministic;
  laws[3].kind = DepartureKind::markov_modulated;
  laws[3].phase_rates = {2.0, 0.5};
  laws[3].transition = {{0.7, 0.3}, {0.4, 0.6}};

  double worst = 0.0;
  bool pass = true;
  json rows = json::array();
  for (std::size_t m = 0; m < laws.size(); ++m) {
    EpochStream stream({laws[m], 1.0 / (mu * n)}, derive_seed(base, StreamPurpose::client_departures, m, 0));
    const double scaled = empirical_rate(stream, t, n);
    const double c2 = asymptotic_dispersion(laws[m]);
    const double bound = std::max(4.0 * std::sqrt(c2 * mu * t) / std::sqrt(n), 1.0 / n);
    const double gap = std::abs(scaled - mu * t);
    worst = std::max(worst, gap / bound);
    pass = pass && gap <= bound;
    rows.push_back({{"kind", to_string(laws[m].kind)}, {"S_over_N", scaled}, {"dispersion", c2}, {"bound", bound}});
  }
  return make(12, "rate law", worst, 1.0, pass, "max over kinds of |S(1)/N - mu t| / (4 sqrt(c^2 mu t) / sqrt(N)), N=1e4",
              {{"rows", rows}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CriterionResult Suite::determinism() {
  auto config = scenario("markov_one_server");
  config.sim.reps = 6;
  fs::path root = opt_.scratch_dir;
  bool made_temp = false;
  if (root.empty()) {
    std::string templ = (fs::temp_directory_path() / "cqn-verify-XXXXXX").string();
    if (!mkdtemp(templ.data())) throw IoError("cannot create a temporary directory");
    root = templ;
    made_temp = true;
  }
  const auto a = root / "run_a";
  const auto b = root / "run_b";
  write_simulation(config, a);
  config.sim.threads = std::max(2u, opt_.threads);
  write_simulation(config, b);
  std::size_t differing = 0;
  std::string names;
  for (const char* f : {"summary.json", "trajectories.csv", "crossings.csv", "predeparture.jsonl"}) {
    const auto x = slurp(a / f);
    if (x.empty() || x != slurp(b / f)) {
      ++differing;
      names += std::string(" ") + f;
    }
  }

  auto sim = config.sim_config();
  sim.record.queue_paths = true;
  const auto serial = replicate(sim, 8, 1);
  const auto parallel = replicate(sim, 8, 4);
  const bool same = serial == parallel;
  if (!same) ++differing;
  if (made_temp) {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  return make(13, "determinism", static_cast<double>(differing), 0.0, differing == 0,
              "two simulate runs (1 vs " + std::to_string(config.sim.threads) +
                  " threads) compared byte for byte; serial vs 4-thread replicate " + (same ? "identical" : "differs") +
                  (names.empty() ? "" : "; differing:" + names));
}

void Suite::remaining_scenarios() {
  for (const auto& name : bundled_scenario_names()) {
    if (scenarios_seen_.count(name)) continue;
    const auto config = scenario(name);
    auto sim = config.sim_config();
    sim.record.predeparture = false;
    simulate(name, sim, config.sim.reps, [](const Trajectory&) {});
  }
}

VerifyReport Suite::run() {
    std::vector<CriterionResult> r(13);
  r[1] = reflection();
  markov_single_path(r[2], r[3]);
  markov_replications(r[4]);
  shared_hub(r[5], r[6]);
  r[7] = disjoint_invariance();
  r[8] = critical_regime();
  remaining_scenarios();
  r[9] = make(10, "server occupancy", occupancy_.worst_ratio, 1.0, occupancy_.pass,
              "max over scenarios, servers and t in {1, 3, 5} of |mean Sigma_i/N - fluid| / (4 stderr + 0.02)",
              {{"rows", occupancy_.rows}});
  r[10] = fluid_consistency();
  r[11] = rate_law();
  r[12] = determinism();
  r[0] = crossing_identity();
  return VerifyReport{std::move(r)};
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& options) { return Suite(options).run(); }

}  // namespace cqn
