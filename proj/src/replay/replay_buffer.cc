#include "plangan/replay/replay_buffer.h"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "plangan/core/errors.h"
#include "plangan/envs/trajectory_log.h"

namespace plangan::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity, double epsilon)
    : capacity_(capacity), epsilon_(epsilon) {
  if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
  if (!(epsilon_ >= 0.0)) throw ConfigError("replay epsilon must be non-negative");
}

bool ReplayBuffer::Store(Trajectory trajectory) {
  trajectory.Validate();
  env_steps_ += trajectory.length();
  const double moved =
      (trajectory.achieved_goals.back() - trajectory.achieved_goals.front()).norm();
  if (!(moved > epsilon_)) {
    ++discarded_;
    return false;
  }
  if (trajectories_.size() == capacity_) {
    trajectories_.pop_front();
    ++evicted_;
  }
  trajectories_.push_back(std::move(trajectory));
  ++stored_;
  return true;
}

std::vector<GanWindow> ReplayBuffer::SampleGanBatch(int batch_size, int tau, Rng& rng) const {
  if (tau < 1) throw ConfigError("window length tau must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < trajectories_.size(); ++i)
    if (trajectories_[i].length() >= tau) eligible.push_back(i);
  if (eligible.empty())
    throw UnavailableError("replay buffer has no trajectory with at least tau steps");

  std::vector<GanWindow> windows(static_cast<std::size_t>(batch_size));
  for (auto& w : windows) {
    w.trajectory_index =
        eligible[static_cast<std::size_t>(rng.Index(0, static_cast<std::int64_t>(eligible.size()) - 1))];
    const Trajectory& src = trajectories_[w.trajectory_index];
    const int horizon = src.length();
    w.start = static_cast<int>(rng.Index(0, horizon - tau));
    for (int i = 0; i <= tau; ++i) w.states.push_back(src.states[w.start + i]);
    for (int i = 0; i < tau; ++i) {
      w.actions.push_back(src.actions[w.start + i]);
      // Strictly later achieved goal: index in (start + i, T].
      const int idx = static_cast<int>(rng.Index(w.start + i + 1, horizon));
      w.goal_indices.push_back(idx);
      w.goals.push_back(src.achieved_goals[idx]);
    }
  }
  return windows;
}

std::vector<Transition> ReplayBuffer::SampleModelBatch(int batch_size, Rng& rng) const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (trajectories_.empty()) throw UnavailableError("replay buffer is empty");
  std::vector<std::int64_t> cumulative;
  cumulative.reserve(trajectories_.size());
  std::int64_t total = 0;
  for (const auto& t : trajectories_) cumulative.push_back(total += t.length());

  std::vector<Transition> batch(static_cast<std::size_t>(batch_size));
  for (auto& tr : batch) {
    const std::int64_t k = rng.Index(0, total - 1);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), k);
    tr.trajectory_index = static_cast<std::size_t>(it - cumulative.begin());
    const std::int64_t before = tr.trajectory_index == 0 ? 0 : cumulative[tr.trajectory_index - 1];
    tr.step = static_cast<int>(k - before);
    const Trajectory& src = trajectories_[tr.trajectory_index];
    tr.state = src.states[tr.step];
    tr.action = src.actions[tr.step];
    tr.next_state = src.states[tr.step + 1];
  }
  return batch;
}

void ReplayBuffer::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    envs::TrajectoryLogWriter writer(dir / "trajectories.jsonl",
                                     {{"source", "replay_buffer"}}, epsilon_);
    std::int64_t id = 0;
    for (const auto& t : trajectories_) writer.Append(id++, t);
    writer.Flush();
  }
  const nlohmann::json manifest = {{"capacity", capacity_},     {"epsilon", epsilon_},
                                   {"size", trajectories_.size()}, {"stored", stored_},
                                   {"discarded", discarded_},   {"evicted", evicted_},
                                   {"env_steps", env_steps_}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write replay manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

ReplayBuffer ReplayBuffer::Load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot read replay manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    ReplayBuffer buffer(manifest.at("capacity").get<std::size_t>(),
                        manifest.at("epsilon").get<double>());
    auto log = envs::ReadTrajectoryLog(dir / "trajectories.jsonl");
    for (auto& ep : log.episodes) buffer.trajectories_.push_back(std::move(ep.trajectory));
    if (buffer.trajectories_.size() != manifest.at("size").get<std::size_t>())
      throw IoError("replay manifest size does not match trajectory file");
    buffer.stored_ = manifest.at("stored").get<std::int64_t>();
    buffer.discarded_ = manifest.at("discarded").get<std::int64_t>();
    buffer.evicted_ = manifest.at("evicted").get<std::int64_t>();
    buffer.env_steps_ = manifest.at("env_steps").get<std::int64_t>();
    return buffer;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed replay manifest: " + std::string(e.what()));
  }
}

bool ReplayBuffer::operator==(const ReplayBuffer& other) const {
  return capacity_ == other.capacity_ && epsilon_ == other.epsilon_ &&
         trajectories_ == other.trajectories_ && stored_ == other.stored_ &&
         discarded_ == other.discarded_ && evicted_ == other.evicted_ &&
         env_steps_ == other.env_steps_;
}

}  // namespace plangan::replay
