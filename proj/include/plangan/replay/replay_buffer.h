#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <vector>

#include "plangan/core/rng.h"
#include "plangan/replay/trajectory.h"

namespace plangan::replay {

// A contiguous real sub-trajectory with hindsight goals: states s_0..s_tau,
// actions a_0..a_{tau-1}, and goals g_0..g_{tau-1} where g_i is the achieved
// goal at source index goal_indices[i] > start + i.
struct GanWindow {
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::vector<Vector> goals;
  std::size_t trajectory_index = 0;  // position in the buffer when sampled
  int start = 0;
  std::vector<int> goal_indices;
};

struct Transition {
  Vector state;
  Vector action;
  Vector next_state;
  std::size_t trajectory_index = 0;
  int step = 0;
};

// Bounded FIFO store of real trajectories.
//
// Trajectories whose final achieved goal lies within epsilon of the initial
// achieved goal are discarded, but their environment steps are still counted.
class ReplayBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 5000;

  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity, double epsilon = 0.05);

  // Returns whether the trajectory was kept. Throws ConfigError when the
  // trajectory is malformed (nothing is counted in that case).
  bool Store(Trajectory trajectory);

  // Throws UnavailableError when no stored trajectory has at least tau steps.
  std::vector<GanWindow> SampleGanBatch(int batch_size, int tau, Rng& rng) const;
  // Uniform over all (trajectory, step) pairs.
  std::vector<Transition> SampleModelBatch(int batch_size, Rng& rng) const;

  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  std::size_t capacity() const { return capacity_; }
  double epsilon() const { return epsilon_; }
  const Trajectory& at(std::size_t i) const { return trajectories_.at(i); }

  std::int64_t stored_count() const { return stored_; }
  std::int64_t discarded_count() const { return discarded_; }
  std::int64_t evicted_count() const { return evicted_; }
  std::int64_t env_steps() const { return env_steps_; }

  // trajectories.jsonl (trajectory log format) plus manifest.json with the
  // counters. Load restores an identical buffer.
  void Save(const std::filesystem::path& dir) const;
  static ReplayBuffer Load(const std::filesystem::path& dir);

  bool operator==(const ReplayBuffer& other) const;

 private:
  std::size_t capacity_;
  double epsilon_;
  std::deque<Trajectory> trajectories_;
  std::int64_t stored_ = 0;
  std::int64_t discarded_ = 0;
  std::int64_t evicted_ = 0;
  std::int64_t env_steps_ = 0;
};

}  // namespace plangan::replay
