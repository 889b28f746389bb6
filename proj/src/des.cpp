#include "cqn/des.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <queue>
#include <stdexcept>
#include <thread>

#include "cqn/point_process.hpp"
#include "cqn/rng.hpp"

namespace cqn {

const char* to_string(QueueDiscipline d) noexcept {
  switch (d) {
    case QueueDiscipline::fifo:
      return "fifo";
    case QueueDiscipline::lifo:
      return "lifo";
    case QueueDiscipline::random:
      return "random";
  }
  return "unknown";
}

void check_config(const SimConfig& config) {
  if (auto v = validate_spec(config.spec); !v.empty())
    throw std::invalid_argument(std::string("invalid network: ") + to_string(v.front().code) + " " + v.front().detail);
  if (!(config.horizon > 0.0 && std::isfinite(config.horizon)))
    throw std::invalid_argument("horizon must be positive");
  if (config.record_levels < 1) throw std::invalid_argument("record_levels must be at least 1");
  for (std::size_t g = 0; g < config.sample_grid.size(); ++g) {
    const double t = config.sample_grid[g];
    if (!(t >= 0.0 && t <= config.horizon)) throw std::invalid_argument("sample grid must lie in [0, horizon]");
    if (g > 0 && t < config.sample_grid[g - 1]) throw std::invalid_argument("sample grid must be sorted");
  }
}

namespace {

enum class EventType : std::uint8_t { client = 0, server = 1 };

struct Event {
  double time;
  EventType type;
  std::uint32_t index;
  std::uint64_t version;
};

// Earliest time first; at equal times client epochs come before server
// completions, then lower station index.
struct Later {
  bool operator()(const Event& a, const Event& b) const noexcept {
    if (a.time != b.time) return a.time > b.time;
    if (a.type != b.type) return a.type > b.type;
    return a.index > b.index;
  }
};

class Engine {
 public:
  Engine(const SimConfig& config, std::uint64_t replication)
      : config_(config), spec_(config.spec), r_(spec_.servers()), k_(spec_.clients()), levels_(config.record_levels) {
    const double n = static_cast<double>(spec_.total_units());
    total_ = spec_.total_units();
    for (std::size_t j = 0; j < k_; ++j) {
      PointProcessSpec pp{spec_.departure[j], 1.0 / (spec_.client_rate[j] * n)};
      streams_.emplace_back(pp, derive_seed(config.seed, StreamPurpose::client_departures, j, replication));
    }
    for (std::size_t i = 0; i < r_; ++i) {
      alarm_rng_.emplace_back(derive_seed(config.seed, StreamPurpose::server_alarms, i, replication));
      route_rng_.emplace_back(derive_seed(config.seed, StreamPurpose::routing, i, replication));
      std::vector<double> cum;
      double acc = 0.0;
      for (double p : spec_.routing[i]) cum.push_back(acc += p);
      cumulative_.push_back(std::move(cum));
    }
    discipline_rng_.emplace(derive_seed(config.seed, StreamPurpose::discipline, 0, replication));

    sigma_.assign(spec_.units.begin(), spec_.units.end());
    queues_.resize(k_);
    class_count_.assign(k_, std::vector<std::int32_t>(r_, 0));
    alarm_version_.assign(r_, 0);

    auto& t = traj_;
    t.replication = replication;
    t.servers = r_;
    t.clients = k_;
    t.levels = levels_;
    t.horizon = config.horizon;
    t.grid = config.sample_grid;
    t.stations.resize(k_);
    t.up.assign(k_, std::vector<std::uint64_t>(static_cast<std::size_t>(levels_) + 1, 0));
    t.down.assign(k_, std::vector<std::uint64_t>(static_cast<std::size_t>(levels_) + 1, 0));
    t.arrivals.assign(k_, 0);
    t.departures.assign(k_, 0);
    t.epochs.assign(k_, 0);
    t.queue.reserve(t.grid.size() * k_);
    t.class_queue.reserve(t.grid.size() * r_ * k_);
    t.server.reserve(t.grid.size() * r_);
  }

  Trajectory run() {
    for (std::size_t j = 0; j < k_; ++j)
      heap_.push({streams_[j].peek(), EventType::client, static_cast<std::uint32_t>(j), 0});
    for (std::size_t i = 0; i < r_; ++i) {
      if (config_.server_mode == ServerMode::aggregate) {
        schedule_alarm(i, 0.0);
      } else {
        for (std::int64_t u = 0; u < sigma_[i]; ++u) schedule_unit(i, 0.0);
      }
    }

    std::size_t g = 0;
    const auto& grid = config_.sample_grid;
    double previous = -1.0;
    while (!heap_.empty() && heap_.top().time <= config_.horizon) {
      const Event e = heap_.top();
      heap_.pop();
      if (e.type == EventType::server && config_.server_mode == ServerMode::aggregate &&
          e.version != alarm_version_[e.index])
        continue;
      while (g < grid.size() && grid[g] < e.time) sample(g++);
      if (e.time == previous) ++traj_.ties;
      previous = e.time;
      ++traj_.events;
      if (e.type == EventType::client)
        client_epoch(e.index, e.time);
      else
        server_completion(e.index, e.time);
      check_invariants();
    }
    while (g < grid.size()) sample(g++);

    for (std::size_t j = 0; j < k_; ++j) traj_.final_queue.push_back(static_cast<std::int32_t>(queues_[j].size()));
    return std::move(traj_);
  }

 private:
  void schedule_alarm(std::size_t i, double now) {
    ++alarm_version_[i];
    if (sigma_[i] == 0) return;
    const double rate = spec_.server_rate[i] * static_cast<double>(sigma_[i]);
    heap_.push({now + alarm_rng_[i].exponential(rate), EventType::server, static_cast<std::uint32_t>(i),
                alarm_version_[i]});
  }

  void schedule_unit(std::size_t i, double now) {
    heap_.push({now + alarm_rng_[i].exponential(spec_.server_rate[i]), EventType::server,
                static_cast<std::uint32_t>(i), 0});
  }

  void unit_left_server(std::size_t i, double now) {
    --sigma_[i];
    if (config_.server_mode == ServerMode::aggregate) schedule_alarm(i, now);
  }

  void unit_returned(std::size_t i, double now) {
    ++sigma_[i];
    if (config_.server_mode == ServerMode::aggregate)
      schedule_alarm(i, now);
    else
      schedule_unit(i, now);
  }

  void server_completion(std::size_t i, double now) {
    const double u = route_rng_[i].uniform();
    const auto& cum = cumulative_[i];
    std::size_t j = 0;
    while (j + 1 < k_ && !(u < cum[j])) ++j;
    // Rounding in the last cumulative entry can land on a zero-probability tail.
    while (spec_.routing[i][j] <= 0.0 && j > 0) --j;

    const auto before = static_cast<std::int32_t>(queues_[j].size());
    unit_left_server(i, now);
    queues_[j].push_back(static_cast<std::int32_t>(i));
    ++class_count_[j][i];
    ++traj_.arrivals[j];
    if (before <= levels_) ++traj_.up[j][static_cast<std::size_t>(before)];

    if (config_.record.wants(j)) {
      auto& st = traj_.stations[j];
      if (config_.record.queue_paths) st.queue_path.push_back({now, before + 1});
      if (config_.record.drivers) st.driver.emplace_back(now, 1.0);
    }
  }

  void client_epoch(std::size_t j, double now) {
    streams_[j].advance();
    heap_.push({streams_[j].peek(), EventType::client, static_cast<std::uint32_t>(j), 0});
    ++traj_.epochs[j];

    auto& queue = queues_[j];
    const auto before = static_cast<std::int32_t>(queue.size());
    const bool detail = config_.record.wants(j);
    if (detail) {
      auto& st = traj_.stations[j];
      if (config_.record.predeparture) st.predeparture.push_back({now, before});
      if (config_.record.drivers) st.driver.emplace_back(now, -1.0);
    }
    if (before <= levels_) ++traj_.down[j][static_cast<std::size_t>(before)];
    if (before == 0) return;

    std::int32_t tag;
    switch (config_.discipline) {
      case QueueDiscipline::fifo:
        tag = queue.front();
        queue.pop_front();
        break;
      case QueueDiscipline::lifo:
        tag = queue.back();
        queue.pop_back();
        break;
      case QueueDiscipline::random:
      default: {
        const auto pick = discipline_rng_->below(queue.size());
        std::swap(queue[pick], queue.back());
        tag = queue.back();
        queue.pop_back();
        break;
      }
    }
    --class_count_[j][static_cast<std::size_t>(tag)];
    ++traj_.departures[j];
    if (detail && config_.record.queue_paths) traj_.stations[j].queue_path.push_back({now, before - 1});
    unit_returned(static_cast<std::size_t>(tag), now);
  }

  void sample(std::size_t) {
    for (std::size_t j = 0; j < k_; ++j) traj_.queue.push_back(static_cast<std::int32_t>(queues_[j].size()));
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < k_; ++j) traj_.class_queue.push_back(class_count_[j][i]);
    for (std::size_t i = 0; i < r_; ++i) traj_.server.push_back(static_cast<std::int32_t>(sigma_[i]));
  }

  void check_invariants() {
    std::int64_t held = 0;
    for (auto s : sigma_) held += s;
    bool ok = true;
    for (std::size_t j = 0; j < k_; ++j) {
      const auto size = static_cast<std::int64_t>(queues_[j].size());
      held += size;
      ok = ok && static_cast<std::int64_t>(traj_.arrivals[j] - traj_.departures[j]) == size;
    }
    if (!ok || held != total_) ++traj_.invariant_failures;
  }

  const SimConfig& config_;
  const NetworkSpec& spec_;
  std::size_t r_;
  std::size_t k_;
  int levels_;
  std::int64_t total_ = 0;

  std::vector<EpochStream> streams_;
  std::vector<Xoshiro256> alarm_rng_;
  std::vector<Xoshiro256> route_rng_;
  std::optional<Xoshiro256> discipline_rng_;
  std::vector<std::vector<double>> cumulative_;

  std::vector<std::int64_t> sigma_;
  std::vector<std::deque<std::int32_t>> queues_;
  std::vector<std::vector<std::int32_t>> class_count_;  // [j][i]
  std::vector<std::uint64_t> alarm_version_;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;

  Trajectory traj_;
};

}  // namespace

Trajectory run_replication(const SimConfig& config, std::uint64_t replication) {
  check_config(config);
  return Engine(config, replication).run();
}

std::vector<Trajectory> replicate(const SimConfig& config, std::size_t n_reps, unsigned threads) {
  return replicate_range(config, 0, n_reps, threads);
}

std::vector<Trajectory> replicate_range(const SimConfig& config, std::size_t first, std::size_t n_reps,
                                        unsigned threads) {
  if (n_reps == 0) throw std::invalid_argument("n_reps must be at least 1");
  check_config(config);
  std::vector<Trajectory> out(n_reps);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_reps)));
  if (threads == 1) {
    for (std::size_t m = 0; m < n_reps; ++m) out[m] = Engine(config, first + m).run();
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t m = next++; m < n_reps; m = next++) {
      try {
        out[m] = Engine(config, first + m).run();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cqn
