#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "cqn/cqn.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  cqn_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("bundled configs through the C interface") {
  char* names = nullptr;
  REQUIRE(cqn_bundled_names(&names) == CQN_OK);
  const auto list = take(names);
  CHECK(list.find("markov_one_server\n") != std::string::npos);

  cqn_config* c = nullptr;
  REQUIRE(cqn_config_bundled("two_components", &c) == CQN_OK);
  char* report = nullptr;
  CHECK(cqn_validate(c, &report) == CQN_OK);
  CHECK(take(report).find("\"components\"") != std::string::npos);
  char* dir = nullptr;
  CHECK(cqn_config_output_dir(c, &dir) == CQN_OK);
  CHECK(take(dir) == "out/two_components");
  CHECK(cqn_config_set_reps(c, 0) == CQN_INVALID_ARGUMENT);
  CHECK(std::string(cqn_last_error()).find("reps") != std::string::npos);
  double scale = 0.0;
  CHECK(cqn_config_rho_scale(c, &scale) == CQN_OK);
  CHECK(scale == 1.0);
  cqn_config_free(c);

  CHECK(cqn_config_bundled("nope", &c) == CQN_INVALID_ARGUMENT);
  CHECK(std::string(cqn_last_error()).size() > 0);
}

TEST_CASE("status codes") {
  cqn_config* c = nullptr;
  CHECK(cqn_config_parse("{", &c) == CQN_PARSE_ERROR);
  CHECK(cqn_config_load("/nonexistent/x.json", &c) == CQN_IO_ERROR);
  CHECK(cqn_config_parse(nullptr, &c) == CQN_INVALID_ARGUMENT);
  CHECK(cqn_validate(nullptr, nullptr) == CQN_INVALID_ARGUMENT);

  const char* bad_rows = R"({"network": {"servers": [{"units": 10, "rate": 1, "routing": [0.5, 0.4]}],
                                         "clients": [{"rate": 1}, {"rate": 0.1}]}})";
  REQUIRE(cqn_config_parse(bad_rows, &c) == CQN_OK);
  char* report = nullptr;
  CHECK(cqn_validate(c, &report) == CQN_CHECK_FAILED);
  CHECK(take(report).find("ROW_NOT_STOCHASTIC") != std::string::npos);
  CHECK(cqn_fluid(c, "unused") == CQN_CHECK_FAILED);
  cqn_config_free(c);
  cqn_config_free(nullptr);
}

TEST_CASE("fluid and simulate write their files") {
  const fs::path dir = fs::temp_directory_path() / ("cqn-capi-" + std::to_string(::getpid()));
  cqn_config* c = nullptr;
  REQUIRE(cqn_config_bundled("markov_one_server", &c) == CQN_OK);
  CHECK(cqn_config_set_reps(c, 2) == CQN_OK);
  CHECK(cqn_config_set_threads(c, 2) == CQN_OK);
  CHECK(cqn_fluid(c, dir.c_str()) == CQN_OK);
  CHECK(fs::exists(dir / "fluid_curves.csv"));
  int lines = 0;
  auto count = [](const char*, void* user) { ++*static_cast<int*>(user); };
  CHECK(cqn_simulate(c, dir.c_str(), count, &lines) == CQN_OK);
  CHECK(lines > 0);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(cqn_crossings(c, dir.c_str(), nullptr, nullptr) == CQN_OK);
  char* dumped = nullptr;
  CHECK(cqn_config_dump(c, &dumped) == CQN_OK);
  CHECK(take(dumped).find("\"reps\": 2") != std::string::npos);
  cqn_config_free(c);
  fs::remove_all(dir);
}
