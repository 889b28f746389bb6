#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqn/des.hpp"
#include "cqn/net_model.hpp"

namespace cqn {

// Malformed or schema-violating configuration text; message carries the
// location when the JSON itself is malformed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double t_max = 5.0;
  std::size_t points = 51;

  std::vector<double> times() const;  // points equally spaced values on [0, t_max]
};

struct SimSettings {
  double horizon = 0.0;  // 0 means grid.t_max
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  unsigned threads = 1;
  int record_levels = 10;
  QueueDiscipline discipline = QueueDiscipline::fifo;
  ServerMode server_mode = ServerMode::aggregate;
  RecordOptions record;
};

inline const std::vector<std::string> kKnownAnalyses = {
    "fluid", "simulate", "integral_relation", "geometric_law", "time_invariance", "crossings", "occupancy"};

struct ExperimentConfig {
  std::string name;
  NetworkSpec network;
  SimSettings sim;
  GridSpec grid;
  std::vector<std::string> analyses;
  std::string output_dir = "out";
  double rho_scale = 1.0;  // fault injection for the verification suite

  bool wants(const std::string& analysis) const;
  SimConfig sim_config() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON text of a config (used to echo configs into reports).
std::string dump_config(const ExperimentConfig& config);

}  // namespace cqn
