#include "cqn/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cqn {

using nlohmann::json;

std::vector<double> GridSpec::times() const {
  std::vector<double> out;
  if (points == 0) return out;
  if (points == 1) return {t_max};
  for (std::size_t g = 0; g < points; ++g)
    out.push_back(t_max * static_cast<double>(g) / static_cast<double>(points - 1));
  return out;
}

bool ExperimentConfig::wants(const std::string& analysis) const {
  return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

SimConfig ExperimentConfig::sim_config() const {
  SimConfig c;
  c.spec = network;
  c.horizon = sim.horizon > 0.0 ? sim.horizon : grid.t_max;
  c.sample_grid = grid.times();
  c.seed = sim.seed;
  c.record_levels = sim.record_levels;
  c.discipline = sim.discipline;
  c.server_mode = sim.server_mode;
  c.record = sim.record;
  return c;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t n = 0; n < v.size(); ++n) out.push_back(number(v[n], where + "[" + std::to_string(n) + "]"));
  return out;
}

std::uint64_t unsigned_integer(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) fail(where, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

DepartureLaw parse_law(const json& v, const std::string& where) {
  DepartureLaw law;
  if (v.is_string()) {
    const auto kind = departure_kind_from_string(v.get<std::string>());
    if (!kind) fail(where, "unknown departure kind '" + v.get<std::string>() + "'");
    law.kind = *kind;
    if (law.kind == DepartureKind::gamma || law.kind == DepartureKind::markov_modulated)
      fail(where, "this departure kind needs parameters; use an object");
    return law;
  }
  const auto& kind_value = field(v, "kind", where);
  if (!kind_value.is_string()) fail(where + ".kind", "expected a string");
  const auto kind = departure_kind_from_string(kind_value.get<std::string>());
  if (!kind) fail(where + ".kind", "unknown departure kind '" + kind_value.get<std::string>() + "'");
  law.kind = *kind;
  if (law.kind == DepartureKind::gamma) law.shape = number(field(v, "shape", where), where + ".shape");
  if (law.kind == DepartureKind::markov_modulated) {
    law.phase_rates = numbers(field(v, "phase_rates", where), where + ".phase_rates");
    const auto& rows = field(v, "transition", where);
    if (!rows.is_array()) fail(where + ".transition", "expected an array of rows");
    for (std::size_t n = 0; n < rows.size(); ++n)
      law.transition.push_back(numbers(rows[n], where + ".transition[" + std::to_string(n) + "]"));
  }
  return law;
}

json dump_law(const DepartureLaw& law) {
  json out = {{"kind", to_string(law.kind)}};
  if (law.kind == DepartureKind::gamma) out["shape"] = law.shape;
  if (law.kind == DepartureKind::markov_modulated) {
    out["phase_rates"] = law.phase_rates;
    out["transition"] = law.transition;
  }
  return out;
}

NetworkSpec parse_network(const json& v) {
  NetworkSpec spec;
  const auto& servers = field(v, "servers", "network");
  if (!servers.is_array()) fail("network.servers", "expected an array");
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const std::string where = "network.servers[" + std::to_string(i) + "]";
    const auto& units = field(servers[i], "units", where);
    if (!units.is_number_integer()) fail(where + ".units", "expected an integer");
    spec.units.push_back(units.get<std::int64_t>());
    spec.server_rate.push_back(number(field(servers[i], "rate", where), where + ".rate"));
    spec.routing.push_back(numbers(field(servers[i], "routing", where), where + ".routing"));
  }
  const auto& clients = field(v, "clients", "network");
  if (!clients.is_array()) fail("network.clients", "expected an array");
  for (std::size_t j = 0; j < clients.size(); ++j) {
    const std::string where = "network.clients[" + std::to_string(j) + "]";
    spec.client_rate.push_back(number(field(clients[j], "rate", where), where + ".rate"));
    const auto it = clients[j].find("departure");
    spec.departure.push_back(it == clients[j].end() ? DepartureLaw{} : parse_law(*it, where + ".departure"));
  }
  if (const auto it = v.find("units"); it != v.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() != spec.total_units())
      fail("network.units", "does not equal the sum of server units");
  }
  if (const auto it = v.find("beta_convention"); it != v.end()) {
    const auto name = it->is_string() ? it->get<std::string>() : std::string();
    if (name == "unit_sum")
      spec.beta_convention = BetaConvention::unit_sum;
    else if (name == "literal")
      spec.beta_convention = BetaConvention::literal;
    else
      fail("network.beta_convention", "expected 'unit_sum' or 'literal'");
  }
  return spec;
}

void parse_sim(const json& v, SimSettings& sim) {
  if (!v.is_object()) fail("sim", "expected an object");
  if (v.contains("horizon")) sim.horizon = number(v["horizon"], "sim.horizon");
  if (v.contains("seed")) sim.seed = unsigned_integer(v["seed"], "sim.seed");
  if (v.contains("reps")) sim.reps = unsigned_integer(v["reps"], "sim.reps");
  if (v.contains("threads")) sim.threads = static_cast<unsigned>(unsigned_integer(v["threads"], "sim.threads"));
  if (v.contains("record_levels"))
    sim.record_levels = static_cast<int>(unsigned_integer(v["record_levels"], "sim.record_levels"));
  if (v.contains("discipline")) {
    const auto name = v["discipline"].is_string() ? v["discipline"].get<std::string>() : std::string();
    if (name == "fifo")
      sim.discipline = QueueDiscipline::fifo;
    else if (name == "lifo")
      sim.discipline = QueueDiscipline::lifo;
    else if (name == "random")
      sim.discipline = QueueDiscipline::random;
    else
      fail("sim.discipline", "expected 'fifo', 'lifo' or 'random'");
  }
  if (v.contains("server_mode")) {
    const auto name = v["server_mode"].is_string() ? v["server_mode"].get<std::string>() : std::string();
    if (name == "aggregate")
      sim.server_mode = ServerMode::aggregate;
    else if (name == "per_unit")
      sim.server_mode = ServerMode::per_unit;
    else
      fail("sim.server_mode", "expected 'aggregate' or 'per_unit'");
  }
  if (v.contains("record")) {
    const auto& rec = v["record"];
    if (!rec.is_object()) fail("sim.record", "expected an object");
    auto flag = [&](const char* key, bool& out) {
      if (!rec.contains(key)) return;
      if (!rec[key].is_boolean()) fail(std::string("sim.record.") + key, "expected a boolean");
      out = rec[key].get<bool>();
    };
    flag("predeparture", sim.record.predeparture);
    flag("queue_paths", sim.record.queue_paths);
    flag("drivers", sim.record.drivers);
    if (rec.contains("stations")) {
      const auto ids = rec["stations"];
      if (!ids.is_array()) fail("sim.record.stations", "expected an array of 1-based client ids");
      for (const auto& id : ids) {
        const auto j = unsigned_integer(id, "sim.record.stations");
        if (j == 0) fail("sim.record.stations", "client ids are 1-based");
        if (sim.record.stations.size() < j) sim.record.stations.resize(j, false);
        sim.record.stations[j - 1] = true;
      }
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  ExperimentConfig c;
  if (root.contains("name") && root["name"].is_string()) c.name = root["name"].get<std::string>();
  c.network = parse_network(field(root, "network", "config"));
  if (root.contains("grid")) {
    const auto& g = root["grid"];
    if (g.contains("t_max")) c.grid.t_max = number(g["t_max"], "grid.t_max");
    if (g.contains("points")) c.grid.points = unsigned_integer(g["points"], "grid.points");
    if (!(c.grid.t_max > 0.0)) fail("grid.t_max", "must be positive");
    if (c.grid.points < 2) fail("grid.points", "must be at least 2");
  }
  if (root.contains("sim")) parse_sim(root["sim"], c.sim);
  if (c.sim.reps == 0) fail("sim.reps", "must be at least 1");
  if (c.sim.record_levels < 1) fail("sim.record_levels", "must be at least 1");
  if (c.sim.horizon < 0.0 || (c.sim.horizon > 0.0 && c.sim.horizon < c.grid.t_max))
    fail("sim.horizon", "must cover grid.t_max");
  if (root.contains("analyses")) {
    const auto& a = root["analyses"];
    if (!a.is_array()) fail("analyses", "expected an array of names");
    for (const auto& name : a) {
      if (!name.is_string()) fail("analyses", "expected an array of names");
      const auto s = name.get<std::string>();
      if (std::find(kKnownAnalyses.begin(), kKnownAnalyses.end(), s) == kKnownAnalyses.end())
        fail("analyses", "unknown analysis '" + s + "'");
      c.analyses.push_back(s);
    }
  }
  if (c.wants("integral_relation")) {
    c.sim.record.predeparture = true;
    c.sim.record.queue_paths = true;
  }
  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string()) fail("output_dir", "expected a string");
    c.output_dir = root["output_dir"].get<std::string>();
  }
  if (root.contains("rho_scale")) c.rho_scale = number(root["rho_scale"], "rho_scale");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& c) {
  json servers = json::array();
  for (std::size_t i = 0; i < c.network.servers(); ++i)
    servers.push_back({{"units", c.network.units[i]},
                       {"rate", c.network.server_rate[i]},
                       {"routing", c.network.routing[i]}});
  json clients = json::array();
  for (std::size_t j = 0; j < c.network.clients(); ++j)
    clients.push_back({{"rate", c.network.client_rate[j]}, {"departure", dump_law(c.network.departure[j])}});
  json stations = json::array();
  for (std::size_t j = 0; j < c.sim.record.stations.size(); ++j)
    if (c.sim.record.stations[j]) stations.push_back(j + 1);

  json root = {
      {"name", c.name},
      {"network",
       {{"servers", servers}, {"clients", clients}, {"beta_convention", to_string(c.network.beta_convention)}}},
      {"grid", {{"t_max", c.grid.t_max}, {"points", c.grid.points}}},
      {"sim",
       {{"horizon", c.sim.horizon},
        {"seed", c.sim.seed},
        {"reps", c.sim.reps},
        {"threads", c.sim.threads},
        {"record_levels", c.sim.record_levels},
        {"discipline", to_string(c.sim.discipline)},
        {"server_mode", c.sim.server_mode == ServerMode::aggregate ? "aggregate" : "per_unit"},
        {"record",
         {{"predeparture", c.sim.record.predeparture},
          {"queue_paths", c.sim.record.queue_paths},
          {"drivers", c.sim.record.drivers},
          {"stations", stations}}}}},
      {"analyses", c.analyses},
      {"output_dir", c.output_dir},
      {"rho_scale", c.rho_scale},
  };
  return root.dump(2);
}

}  // namespace cqn
