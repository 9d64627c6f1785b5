#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "plangan/replay/trajectory.h"

namespace plangan::envs {

// Line-delimited JSON trajectory log.
//
// Line 1 is a header {"record": "config", ...constants}. Every following line
// is one step {"episode", "step", "state", "action", "achieved_goal",
// "desired_goal", "success"}; an episode of length T has T+1 step lines and
// the last one has "action": null. Numbers are written in shortest
// round-trip decimal form, so reading a log back is bit-exact.
class TrajectoryLogWriter {
 public:
  TrajectoryLogWriter(const std::filesystem::path& path, const nlohmann::json& header,
                      double epsilon, bool append = false);

  void Append(std::int64_t episode, const replay::Trajectory& trajectory);
  void Flush();

 private:
  std::ofstream out_;
  double epsilon_;
};

struct LoggedEpisode {
  std::int64_t episode = 0;
  replay::Trajectory trajectory;
};

struct TrajectoryLog {
  nlohmann::json header;
  std::vector<LoggedEpisode> episodes;
};

// Throws IoError on unreadable or malformed input.
TrajectoryLog ReadTrajectoryLog(const std::filesystem::path& path);

// Step lines for one episode, without the header.
std::vector<nlohmann::json> EpisodeRecords(std::int64_t episode,
                                           const replay::Trajectory& trajectory, double epsilon);

}  // namespace plangan::envs
