#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cqn {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;      // observed statistic
  double threshold = 0.0;  // pass iff value <= threshold
  std::string detail;
  std::string diagnostics;  // JSON object text; informational only

  double margin() const noexcept { return threshold - value; }
};

struct VerifyOptions {
  std::size_t reps = 0;  // 0 keeps each scenario's replication count
  unsigned threads = 1;
  double rho_scale = 1.0;  // multiplies every fluid load used as a reference (fault injection)
  std::optional<std::uint64_t> seed;  // replaces every scenario seed
  std::filesystem::path scratch_dir;  // empty: a fresh temporary directory
  std::function<void(const std::string&)> progress;
};

struct VerifyReport {
  std::vector<CriterionResult> results;  // ordered by id

  bool all_pass() const;
  std::string json() const;
};

// Runs the thirteen acceptance criteria over the bundled scenarios.
VerifyReport run_verification(const VerifyOptions& options);

}  // namespace cqn
