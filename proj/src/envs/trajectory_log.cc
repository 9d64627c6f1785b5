#include "plangan/envs/trajectory_log.h"

#include <string>

#include "plangan/core/errors.h"
#include "plangan/envs/goal_env.h"

namespace plangan::envs {
namespace {

nlohmann::json ToJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector FromJson(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::vector<nlohmann::json> EpisodeRecords(std::int64_t episode,
                                           const replay::Trajectory& trajectory, double epsilon) {
  trajectory.Validate();
  std::vector<nlohmann::json> lines;
  for (int t = 0; t <= trajectory.length(); ++t) {
    nlohmann::json rec;
    rec["episode"] = episode;
    rec["step"] = t;
    rec["state"] = ToJson(trajectory.states[t]);
    rec["action"] = t < trajectory.length() ? ToJson(trajectory.actions[t]) : nlohmann::json();
    rec["achieved_goal"] = ToJson(trajectory.achieved_goals[t]);
    rec["desired_goal"] =
        trajectory.desired_goal ? ToJson(*trajectory.desired_goal) : nlohmann::json();
    rec["success"] = trajectory.desired_goal
                         ? Achieves(trajectory.achieved_goals[t], *trajectory.desired_goal, epsilon)
                         : false;
    lines.push_back(std::move(rec));
  }
  return lines;
}

TrajectoryLogWriter::TrajectoryLogWriter(const std::filesystem::path& path,
                                         const nlohmann::json& header, double epsilon,
                                         bool append)
    : epsilon_(epsilon) {
  const bool fresh = !append || !std::filesystem::exists(path);
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw IoError("cannot open trajectory log " + path.string());
  if (fresh) {
    nlohmann::json h = header;
    h["record"] = "config";
    out_ << h.dump() << '\n';
  }
}

void TrajectoryLogWriter::Append(std::int64_t episode, const replay::Trajectory& trajectory) {
  for (const auto& rec : EpisodeRecords(episode, trajectory, epsilon_)) out_ << rec.dump() << '\n';
  if (!out_) throw IoError("failed writing trajectory log");
}

void TrajectoryLogWriter::Flush() { out_.flush(); }

TrajectoryLog ReadTrajectoryLog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory log " + path.string());
  TrajectoryLog log;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto rec = nlohmann::json::parse(line);
      if (rec.contains("record")) {
        log.header = rec;
        continue;
      }
      const std::int64_t episode = rec.at("episode").get<std::int64_t>();
      const int step = rec.at("step").get<int>();
      if (step == 0) {
        log.episodes.push_back({episode, {}});
        if (!rec.at("desired_goal").is_null())
          log.episodes.back().trajectory.desired_goal = FromJson(rec["desired_goal"]);
      }
      if (log.episodes.empty() || log.episodes.back().episode != episode)
        throw IoError("step record before episode start");
      auto& traj = log.episodes.back().trajectory;
      if (static_cast<int>(traj.states.size()) != step)
        throw IoError("non-contiguous step index " + std::to_string(step));
      traj.states.push_back(FromJson(rec.at("state")));
      traj.achieved_goals.push_back(FromJson(rec.at("achieved_goal")));
      if (!rec.at("action").is_null()) traj.actions.push_back(FromJson(rec["action"]));
    }
    for (const auto& ep : log.episodes) ep.trajectory.Validate();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": malformed episode: " + e.what());
  }
  return log;
}

}  // namespace plangan::envs
