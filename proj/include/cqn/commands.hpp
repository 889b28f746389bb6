#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

#include "cqn/config.hpp"

namespace cqn {

// A file or directory could not be created or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The config parsed but describes a network the command cannot run.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ProgressFn = std::function<void(const std::string&)>;

struct ValidationOutcome {
  bool valid = false;
  std::string report;  // JSON text
};

ValidationOutcome validate_experiment(const ExperimentConfig& config);

// fluid_curves.csv, fluid_classes.csv and schema.json.
void write_fluid(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct SimulationOutcome {
  std::size_t reps = 0;
  std::uint64_t crossing_checks = 0;
  std::uint64_t crossing_failures = 0;
  std::uint64_t invariant_failures = 0;

  bool ok() const noexcept { return crossing_failures == 0 && invariant_failures == 0; }
};

// trajectories.csv, predeparture.jsonl, crossings.csv, summary.json and
// schema.json. Replications run in fixed-size batches so that memory stays
// bounded; file contents do not depend on the thread count.
SimulationOutcome write_simulation(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                   const ProgressFn& progress = {});

// crossings.csv and schema.json only.
SimulationOutcome write_crossings(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                  const ProgressFn& progress = {});

// Column documentation for every file the commands write.
std::string output_schema();

// %.17g
std::string format_real(double x);

}  // namespace cqn
