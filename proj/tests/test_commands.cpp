#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cqn/commands.hpp"
#include "json.hpp"
#include "cqn/scenarios.hpp"
#include "doctest.h"

using namespace cqn;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string templ = (fs::temp_directory_path() / "cqn-test-XXXXXX").string();
    path = mkdtemp(templ.data());
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig quick(const std::string& name, std::size_t reps) {
  auto c = bundled_scenario(name);
  for (auto& n : c.network.units) n = 150;
  c.sim.reps = reps;
  return c;
}

}  // namespace

TEST_CASE("format_real") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(-0.0) == "0");
  CHECK(format_real(2.0) == "2");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("fluid output row by hand") {
  TempDir dir;
  write_fluid(bundled_scenario("markov_one_server"), dir.path);
  const auto rows = read_csv(dir.path / "fluid_curves.csv");
  REQUIRE(rows.size() == 52);
  CHECK(rows[0][0] == "t");
  CHECK(rows[0][1] == "q");
  // t = 1: q = (1 - e^{-2}) / 2
  const auto& row = rows[11];
  CHECK(std::stod(row[0]) == doctest::Approx(1.0));
  CHECK(std::stod(row[1]) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-15));
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    INFO(rows[0][c]);
    if (rows[0][c] == "rho_1") CHECK(std::stod(row[c]) == doctest::Approx(0.25 * (1.0 + std::exp(-2.0))));
  }
  // t = 0: nothing queued, loads at their initial values
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    INFO(rows[0][c]);
    if (rows[0][c] == "rho_1")
      CHECK(rows[1][c] == "0.5");
    else if (rows[0][c] == "occ_1")
      CHECK(rows[1][c] == "1");
    else
      CHECK(rows[1][c] == "0");
  }
  CHECK(fs::exists(dir.path / "fluid_classes.csv"));
  CHECK(json::parse(read_file(dir.path / "schema.json"))["files"].contains("fluid_curves.csv"));
}

TEST_CASE("critical fluid output keeps q at zero") {
  TempDir dir;
  write_fluid(bundled_scenario("critical"), dir.path);
  const auto rows = read_csv(dir.path / "fluid_curves.csv");
  for (std::size_t g = 1; g < rows.size(); ++g) CHECK(rows[g][1] == "0");
}

TEST_CASE("simulation files: shape, crossings, byte identity") {
  TempDir a, b;
  auto c = quick("shared_hub_erlang", 5);
  c.sim.threads = 1;
  const auto out = write_simulation(c, a.path);
  CHECK(out.ok());
  CHECK(out.reps == 5);
  CHECK(out.crossing_checks > 0);
  c.sim.threads = 3;
  write_simulation(c, b.path);
  for (const char* f : {"trajectories.csv", "predeparture.jsonl", "crossings.csv", "summary.json", "schema.json"}) {
    INFO(f);
    CHECK(read_file(a.path / f) == read_file(b.path / f));
  }
  const auto traj = read_csv(a.path / "trajectories.csv");
  CHECK(traj.size() == 1 + 5 * 51);
  CHECK(traj[0][0] == "rep");
  const auto cross = read_csv(a.path / "crossings.csv");
  REQUIRE(cross.size() > 1);
  for (std::size_t n = 1; n < cross.size(); ++n) CHECK(cross[n].back() == "1");
  const auto summary = json::parse(read_file(a.path / "summary.json"));
  CHECK(summary["reps"] == 5);
  CHECK(summary.contains("integral_relation"));
  CHECK(summary.contains("occupancy"));

  TempDir only;
  const auto x = write_crossings(c, only.path);
  CHECK(x.crossing_checks == out.crossing_checks);
  CHECK(read_file(only.path / "crossings.csv") == read_file(a.path / "crossings.csv"));
  CHECK_FALSE(fs::exists(only.path / "trajectories.csv"));
}

TEST_CASE("validation report") {
  const auto ok = validate_experiment(bundled_scenario("two_components"));
  CHECK(ok.valid);
  const auto report = json::parse(ok.report);
  CHECK(report["components"].size() == 2);
  auto broken = bundled_scenario("two_components");
  broken.network.routing[0][0] = 0.4;
  const auto bad = validate_experiment(broken);
  CHECK_FALSE(bad.valid);
  CHECK(json::parse(bad.report)["violations"].size() >= 1);
  CHECK_THROWS_AS(write_fluid(broken, fs::temp_directory_path() / "cqn-never"), ValidationError);
}

TEST_CASE("unwritable output is an I/O error") {
  TempDir dir;
  const auto c = quick("markov_one_server", 1);
  fs::create_directories(dir.path / "sub");
  if (fs::exists("/dev/full")) {
    fs::create_symlink("/dev/full", dir.path / "sub" / "fluid_curves.csv");
    CHECK_THROWS_AS(write_fluid(c, dir.path / "sub"), IoError);
  }
  std::ofstream(dir.path / "file") << "x";
  CHECK_THROWS_AS(write_fluid(c, dir.path / "file" / "inside"), IoError);
  CHECK_THROWS_AS(write_simulation(c, dir.path / "file" / "inside"), IoError);
}
