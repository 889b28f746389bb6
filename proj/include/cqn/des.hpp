#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cqn/net_model.hpp"

namespace cqn {

enum class QueueDiscipline { fifo, lifo, random };

// aggregate: one exponential alarm of rate lambda_i * Sigma_i per server.
// per_unit: an independent exponential clock for every unit held by a
// server; slower, kept as a reference for equivalence tests.
enum class ServerMode { aggregate, per_unit };

const char* to_string(QueueDiscipline d) noexcept;

struct RecordOptions {
  bool predeparture = true;  // (epoch, Q(epoch-)) per departure opportunity
  bool queue_paths = false;  // every change of Q_j
  bool drivers = false;      // jumps of X_j = A_j - S_j
  std::vector<bool> stations;  // client stations to record; empty means all

  bool wants(std::size_t j) const noexcept { return stations.empty() || (j < stations.size() && stations[j]); }
};

struct SimConfig {
  NetworkSpec spec;
  double horizon = 1.0;
  std::vector<double> sample_grid;  // sorted, within [0, horizon]
  std::uint64_t seed = 1;
  int record_levels = 10;  // crossing counters track levels 0..L
  QueueDiscipline discipline = QueueDiscipline::fifo;
  ServerMode server_mode = ServerMode::aggregate;
  RecordOptions record;
};

// Throws std::invalid_argument when the config cannot be simulated.
void check_config(const SimConfig& config);

struct PreDeparture {
  double epoch;
  std::int32_t queue;  // Q_j(epoch-)

  bool operator==(const PreDeparture&) const = default;
};

struct PathPoint {
  double time;
  std::int32_t value;  // Q_j from this time on

  bool operator==(const PathPoint&) const = default;
};

struct StationTrace {
  std::vector<PreDeparture> predeparture;
  std::vector<PathPoint> queue_path;  // Q_j(0) = 0 is implicit
  std::vector<std::pair<double, double>> driver;

  bool operator==(const StationTrace&) const = default;
};

struct Trajectory {
  std::uint64_t replication = 0;
  std::size_t servers = 0;
  std::size_t clients = 0;
  int levels = 0;
  double horizon = 0.0;
  std::vector<double> grid;

  std::vector<std::int32_t> queue;        // [g][j]
  std::vector<std::int32_t> class_queue;  // [g][i][j]
  std::vector<std::int32_t> server;       // [g][i]

  std::vector<StationTrace> stations;
  std::vector<std::vector<std::uint64_t>> up;    // up[j][l]: arrivals seeing Q_j = l
  std::vector<std::vector<std::uint64_t>> down;  // down[j][l]: epochs seeing Q_j = l
  std::vector<std::int32_t> final_queue;         // Q_j(T)
  std::vector<std::uint64_t> arrivals;           // A_j(T)
  std::vector<std::uint64_t> departures;         // D_j(T)
  std::vector<std::uint64_t> epochs;             // S_j(T)

  std::uint64_t events = 0;
  std::uint64_t ties = 0;                // events sharing a time stamp with the previous event
  std::uint64_t invariant_failures = 0;  // conservation or A - D = |queue| broken

  std::int32_t queue_at(std::size_t g, std::size_t j) const { return queue[g * clients + j]; }
  std::int32_t class_at(std::size_t g, std::size_t i, std::size_t j) const {
    return class_queue[(g * servers + i) * clients + j];
  }
  std::int32_t server_at(std::size_t g, std::size_t i) const { return server[g * servers + i]; }

  bool operator==(const Trajectory&) const = default;
};

Trajectory run_replication(const SimConfig& config, std::uint64_t replication);

// Replication m is seeded from (config.seed, m); the result does not
// depend on the thread count.
std::vector<Trajectory> replicate(const SimConfig& config, std::size_t n_reps, unsigned threads = 1);

// Replications first .. first + n_reps - 1, identical to the matching
// entries of replicate().
std::vector<Trajectory> replicate_range(const SimConfig& config, std::size_t first, std::size_t n_reps,
                                        unsigned threads = 1);

}  // namespace cqn
