#include "cqn/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>

#include "cqn/fluid.hpp"
#include "cqn/stats.hpp"
#include "json.hpp"

namespace cqn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

constexpr std::size_t kBatch = 16;

// Text file that reports every failure (open, write, flush, close) as IoError.
class Sink {
 public:
  explicit Sink(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  Sink& operator<<(const std::string& s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    check();
    return *this;
  }

  void close() {
    out_.flush();
    check();
    out_.close();
    if (out_.fail()) throw IoError("cannot close " + path_.string());
  }

 private:
  void check() {
    if (!out_) throw IoError("write to " + path_.string() + " failed");
  }

  fs::path path_;
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  Sink s(path);
  s << text;
  s.close();
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

json real_array(const std::vector<double>& xs) { return xs; }

void require_valid(const ExperimentConfig& config) {
  const auto problems = validate_spec(config.network);
  if (problems.empty()) return;
  std::string msg = "invalid network:";
  for (const auto& v : problems) msg += std::string(" ") + to_string(v.code);
  throw ValidationError(msg);
}

std::vector<std::size_t> ids(const std::vector<std::size_t>& zero_based) {
  std::vector<std::size_t> out;
  for (auto x : zero_based) out.push_back(x + 1);
  return out;
}

}  // namespace

ValidationOutcome validate_experiment(const ExperimentConfig& config) {
  const auto& spec = config.network;
  const auto problems = validate_spec(spec);
  json report;
  report["name"] = config.name;
  report["valid"] = problems.empty();
  json violations = json::array();
  for (const auto& v : problems) violations.push_back({{"code", to_string(v.code)}, {"detail", v.detail}});
  report["violations"] = violations;

  const bool structural = std::any_of(problems.begin(), problems.end(), [](const Violation& v) {
    return v.code == ViolationCode::empty_network || v.code == ViolationCode::dimension_mismatch ||
           v.code == ViolationCode::nonpositive_units || v.code == ViolationCode::nonpositive_server_rate ||
           v.code == ViolationCode::nonpositive_client_rate;
  });
  if (!structural) {
    const auto params = derive(spec);
    report["servers"] = spec.servers();
    report["clients"] = spec.clients();
    report["units"] = spec.total_units();
    report["alpha"] = real_array(params.alpha);
    report["rho"] = real_array(params.rho);
    report["rho_finite"] = real_array(params.rho_finite);
    report["beta"] = params.beta;
    report["beta_convention"] = to_string(params.beta_convention);
    if (problems.empty()) {
      const auto topo = classify(spec, params);
      json comps = json::array();
      for (const auto& c : topo.components) comps.push_back({{"servers", ids(c.servers)}, {"clients", ids(c.clients)}});
      report["components"] = comps;
      report["bottleneck_ids"] = ids(topo.bottleneck_ids);
      json stations = json::array();
      for (std::size_t j = 0; j < spec.clients(); ++j)
        stations.push_back({{"client", j + 1},
                            {"feeding_servers", ids(params.feeding_servers[j])},
                            {"shares_hub_with_bottleneck", static_cast<bool>(topo.shares_hub_with_bottleneck[j])},
                            {"regime", to_string(topo.regime[j])}});
      report["stations"] = stations;
    }
  }
  return {problems.empty(), report.dump(2) + "\n"};
}

void write_fluid(const ExperimentConfig& config, const fs::path& out_dir) {
  require_valid(config);
  const FluidModel model(derive(config.network));
  const auto& p = model.params();
  const std::size_t r = p.servers();
  const std::size_t k = p.clients();
  const auto grid = config.grid.times();
  const auto curves = model.curves(grid);

  prepare_dir(out_dir);
  {
    Sink out(out_dir / "fluid_curves.csv");
    std::string line = "t,q,int_q";
    for (std::size_t j = 0; j < k; ++j) line += ",x_star_" + std::to_string(j + 1);
    for (std::size_t j = 0; j + 1 < k; ++j) line += ",rho_" + std::to_string(j + 1);
    for (std::size_t i = 0; i < r; ++i) line += ",occ_" + std::to_string(i + 1);
    out << line + "\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      line = format_real(grid[g]) + "," + format_real(curves.q[g]) + "," + format_real(curves.int_q[g]);
      for (std::size_t j = 0; j < k; ++j) line += "," + format_real(curves.x_star[j][g]);
      for (std::size_t j = 0; j + 1 < k; ++j) line += "," + format_real(curves.rho_t[j][g]);
      for (std::size_t i = 0; i < r; ++i) line += "," + format_real(curves.occupancy[i][g]);
      out << line + "\n";
    }
    out.close();
  }
  {
    Sink out(out_dir / "fluid_classes.csv");
    std::string line = "t";
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < k; ++j) line += ",x_star_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    out << line + "\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      line = format_real(grid[g]);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) line += "," + format_real(curves.x_star_class[i][j][g]);
      out << line + "\n";
    }
    out.close();
  }
  write_text(out_dir / "schema.json", output_schema());
}

namespace {

struct RunPlan {
  bool trajectories = true;
  bool events = true;
  bool summary = true;
};

// Integral relation checkpoints: five equally spaced grid times.
std::vector<std::size_t> checkpoints(std::size_t points) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= 5; ++n) {
    const std::size_t g = (points - 1) * n / 5;
    if (g > 0 && (out.empty() || out.back() != g)) out.push_back(g);
  }
  return out;
}

json dist_json(const DistEstimate& d) {
  return {{"station", d.station + 1}, {"t", d.time},      {"pmf", d.pmf},
          {"std_error", d.std_error}, {"tail", d.tail}, {"n_reps", d.n_reps}};
}

SimulationOutcome run(const ExperimentConfig& config, const fs::path& out_dir, const ProgressFn& progress,
                      const RunPlan& plan) {
  require_valid(config);
  auto sim = config.sim_config();
  if (!plan.summary) {
    sim.record.predeparture = false;
    sim.record.queue_paths = false;
  }
  check_config(sim);
  const auto params = derive(config.network);
  std::optional<FluidModel> model;
  try {
    model.emplace(params);
  } catch (const std::domain_error&) {
  }

  const std::size_t r = params.servers();
  const std::size_t k = params.clients();
  const std::size_t reps = config.sim.reps;
  const int levels = sim.record_levels;
  const auto& grid = sim.sample_grid;
  const auto marks = checkpoints(grid.size());

  prepare_dir(out_dir);
  std::optional<Sink> traj_out, event_out;
  Sink cross_out(out_dir / "crossings.csv");
  cross_out << "rep,station,level,up_below,down,at_or_above,holds\n";
  if (plan.trajectories) {
    traj_out.emplace(out_dir / "trajectories.csv");
    std::string head = "rep,t";
    for (std::size_t j = 0; j < k; ++j) head += ",Q_" + std::to_string(j + 1);
    for (std::size_t i = 0; i < r; ++i) head += ",Sigma_" + std::to_string(i + 1);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < k; ++j) head += ",Q_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    *traj_out << head + "\n";
  }
  if (plan.events && sim.record.predeparture) event_out.emplace(out_dir / "predeparture.jsonl");

  SimulationOutcome outcome;
  outcome.reps = reps;
  std::vector<Trajectory> kept;  // grid data only
  kept.reserve(reps);
  // pre[j][g][m] = Q_j at the last departure opportunity <= grid[g]
  std::vector<std::vector<std::vector<std::int32_t>>> pre(k, std::vector<std::vector<std::int32_t>>(grid.size()));
  // integrals[j][c][m]
  std::vector<std::vector<std::vector<IntegralSample>>> integrals(k, std::vector<std::vector<IntegralSample>>(marks.size()));
  const bool want_integrals = plan.summary && config.wants("integral_relation") && model && sim.record.queue_paths;

  for (std::size_t first = 0; first < reps; first += kBatch) {
    const std::size_t count = std::min(kBatch, reps - first);
    auto batch = replicate_range(sim, first, count, config.sim.threads);
    for (auto& tr : batch) {
      const auto m = tr.replication + 1;
      outcome.invariant_failures += tr.invariant_failures;
      std::string text;
      for (std::size_t j = 0; j < k; ++j) {
        for (int l = 1; l <= levels; ++l) {
          const auto up = tr.up[j][static_cast<std::size_t>(l - 1)];
          const auto down = tr.down[j][static_cast<std::size_t>(l)];
          const int above = tr.final_queue[j] >= l ? 1 : 0;
          const bool holds = up == down + static_cast<std::uint64_t>(above);
          ++outcome.crossing_checks;
          if (!holds) ++outcome.crossing_failures;
          text += std::to_string(m) + "," + std::to_string(j + 1) + "," + std::to_string(l) + "," + std::to_string(up) +
                  "," + std::to_string(down) + "," + std::to_string(above) + "," + (holds ? "1" : "0") + "\n";
        }
      }
      cross_out << text;

      if (traj_out) {
        text.clear();
        for (std::size_t g = 0; g < grid.size(); ++g) {
          text += std::to_string(m) + "," + format_real(grid[g]);
          for (std::size_t j = 0; j < k; ++j) text += "," + std::to_string(tr.queue_at(g, j));
          for (std::size_t i = 0; i < r; ++i) text += "," + std::to_string(tr.server_at(g, i));
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < k; ++j) text += "," + std::to_string(tr.class_at(g, i, j));
          text += "\n";
        }
        *traj_out << text;
      }

      if (event_out) {
        for (std::size_t j = 0; j < k; ++j) {
          if (!sim.record.wants(j)) continue;
          const auto& recs = tr.stations[j].predeparture;
          text = "{\"rep\":" + std::to_string(m) + ",\"station\":" + std::to_string(j + 1) + ",\"epoch\":[";
          for (std::size_t n = 0; n < recs.size(); ++n) text += (n ? "," : "") + format_real(recs[n].epoch);
          text += "],\"queue\":[";
          for (std::size_t n = 0; n < recs.size(); ++n) text += (n ? "," : "") + std::to_string(recs[n].queue);
          text += "]}\n";
          *event_out << text;
        }
      }

      if (plan.summary) {
        for (std::size_t j = 0; j < k; ++j) {
          if (!sim.record.predeparture || !sim.record.wants(j)) continue;
          for (std::size_t g = 0; g < grid.size(); ++g) pre[j][g].push_back(predeparture_value(tr, j, grid[g]));
        }
        if (want_integrals) {
          for (std::size_t j = 0; j + 1 < k; ++j) {
            if (!sim.record.wants(j)) continue;
            for (std::size_t c = 0; c < marks.size(); ++c)
              integrals[j][c].push_back(integral_sample(tr, j, grid[marks[c]], levels, [&](double s) {
                return config.rho_scale * model->rho_integral(j, s);
              }));
          }
        }
      }
      tr.stations.clear();
      kept.push_back(std::move(tr));
    }
    if (progress)
      progress("replications " + std::to_string(first + count) + "/" + std::to_string(reps) + " done");
  }
  cross_out.close();
  if (traj_out) traj_out->close();
  if (event_out) event_out->close();

  if (plan.summary) {
    json s;
    s["name"] = config.name;
    s["seed"] = config.sim.seed;
    s["reps"] = reps;
    s["horizon"] = sim.horizon;
    s["levels"] = levels;
    s["grid"] = grid;
    s["rho"] = params.rho;
    s["alpha"] = params.alpha;
    s["crossings"] = {{"checks", outcome.crossing_checks}, {"failures", outcome.crossing_failures}};
    s["invariant_failures"] = outcome.invariant_failures;

    json queue = json::array();
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t g = 0; g < grid.size(); ++g) queue.push_back(dist_json(pmf_at(kept, j, grid[g], levels)));
    s["queue_pmf"] = queue;

    if (sim.record.predeparture) {
      json pd = json::array();
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t g = 0; g < grid.size(); ++g)
          if (!pre[j][g].empty()) pd.push_back(dist_json(tabulate(j, grid[g], levels, pre[j][g])));
      s["predeparture_pmf"] = pd;
    }

    if (model && config.wants("geometric_law")) {
      json rows = json::array();
      for (std::size_t j = 0; j + 1 < k; ++j) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const double rho_t = config.rho_scale * model->rho(j, grid[g]);
          json row = {{"station", j + 1}, {"t", grid[g]}, {"rho_t", rho_t}};
          if (rho_t < 1.0)
            row["tv"] = tv_distance(pmf_at(kept, j, grid[g], levels).closed(), geometric_pmf(rho_t, levels));
          rows.push_back(row);
        }
      }
      s["geometric_law"] = rows;
    }

    if (config.wants("time_invariance")) {
      json rows = json::array();
      const double t2 = grid.back();
      for (std::size_t j = 0; j + 1 < k; ++j) {
        const double burn_in = std::max(0.4 * t2, 0.5 / params.mu[j]);
        const auto it = std::find_if(grid.begin(), grid.end(), [&](double t) { return t >= burn_in - 1e-12; });
        if (it == grid.end() || *it >= t2) continue;
        const auto rep = time_invariance_check(kept, j, *it, t2, levels);
        rows.push_back({{"station", j + 1}, {"t1", rep.t1}, {"t2", rep.t2}, {"tv", rep.tv}});
      }
      s["time_invariance"] = rows;
    }

    if (model && config.wants("occupancy")) {
      json rows = json::array();
      const double n = static_cast<double>(config.network.total_units());
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const auto est = server_fraction(kept, i, grid[g], n);
          rows.push_back({{"server", i + 1},
                          {"t", grid[g]},
                          {"mean", est.mean},
                          {"std_error", est.std_error},
                          {"fluid", model->occupancy(i, grid[g])}});
        }
      s["occupancy"] = rows;
    }

    if (want_integrals) {
      json rows = json::array();
      for (std::size_t j = 0; j + 1 < k; ++j)
        for (std::size_t c = 0; c < marks.size(); ++c) {
          if (integrals[j][c].empty()) continue;
          const auto est = combine(j, grid[marks[c]], integrals[j][c]);
          rows.push_back({{"station", j + 1},
                          {"t", est.horizon},
                          {"lhs", est.lhs},
                          {"rhs", est.rhs},
                          {"lhs_error", est.lhs_error},
                          {"rhs_error", est.rhs_error},
                          {"diff_error", est.diff_error}});
        }
      s["integral_relation"] = rows;
    }
    write_text(out_dir / "summary.json", s.dump(2) + "\n");
  }
  write_text(out_dir / "schema.json", output_schema());
  return outcome;
}

}  // namespace

SimulationOutcome write_simulation(const ExperimentConfig& config, const fs::path& out_dir,
                                   const ProgressFn& progress) {
  return run(config, out_dir, progress, RunPlan{});
}

SimulationOutcome write_crossings(const ExperimentConfig& config, const fs::path& out_dir,
                                  const ProgressFn& progress) {
  return run(config, out_dir, progress, RunPlan{false, false, false});
}

std::string output_schema() {
  auto col = [](const char* name, const char* type, const char* meaning) {
    return json{{"name", name}, {"type", type}, {"description", meaning}};
  };
  json files = json::object();
  files["fluid_curves.csv"] = {
      {"format", "csv"},
      {"columns",
       {col("t", "real", "time"), col("q", "real", "bottleneck fluid queue q(t)"),
        col("int_q", "real", "integral of q over [0, t]"),
        col("x_star_<j>", "real", "fluid queue of client j, one column per client"),
        col("rho_<j>", "real", "time-dependent load rho_j(t) of non-bottleneck client j"),
        col("occ_<i>", "real", "fluid fraction of all units held by server i")}}};
  files["fluid_classes.csv"] = {
      {"format", "csv"},
      {"columns",
       {col("t", "real", "time"),
        col("x_star_<i>_<j>", "real", "fluid amount of server-i units queued at client j")}}};
  files["trajectories.csv"] = {
      {"format", "csv"},
      {"rows", "one per (replication, grid time)"},
      {"columns",
       {col("rep", "integer", "replication, 1-based"), col("t", "real", "grid time"),
        col("Q_<j>", "integer", "queue length at client j"),
        col("Sigma_<i>", "integer", "units held by server i"),
        col("Q_<i>_<j>", "integer", "server-i units queued at client j")}}};
  files["crossings.csv"] = {
      {"format", "csv"},
      {"rows", "one per (replication, client, level)"},
      {"columns",
       {col("rep", "integer", "replication, 1-based"), col("station", "integer", "client, 1-based"),
        col("level", "integer", "level l >= 1"),
        col("up_below", "integer", "arrivals that found l - 1 units"),
        col("down", "integer", "departure opportunities that found l units"),
        col("at_or_above", "integer", "1 if the final queue is at least l"),
        col("holds", "integer", "1 if up_below = down + at_or_above")}}};
  files["predeparture.jsonl"] = {
      {"format", "jsonl"},
      {"rows", "one per (replication, recorded client)"},
      {"fields",
       {col("rep", "integer", "replication, 1-based"), col("station", "integer", "client, 1-based"),
        col("epoch", "real[]", "departure opportunity times in increasing order"),
        col("queue", "integer[]", "queue length just before each epoch")}}};
  files["summary.json"] = {
      {"format", "json"},
      {"fields",
       {col("queue_pmf", "object[]", "law of Q_j(t) per client and grid time, with tail mass beyond the top level"),
        col("predeparture_pmf", "object[]", "law of Q_j just before the last departure opportunity <= t"),
        col("geometric_law", "object[]", "distance to the geometric law with parameter rho_j(t)"),
        col("time_invariance", "object[]", "distance between the laws at t1 and t2"),
        col("occupancy", "object[]", "mean server fraction with standard error and fluid value"),
        col("integral_relation", "object[]", "time integrals of rho_j P{Q_j = l} and P{pre-departure queue = l + 1}"),
        col("crossings", "object", "count of crossing identity checks and failures")}}};
  return json{{"files", files}}.dump(2) + "\n";
}

}  // namespace cqn
