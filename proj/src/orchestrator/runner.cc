#include "plangan/orchestrator/runner.h"

#include <chrono>
#include <deque>
#include <fstream>
#include <sstream>

#include "plangan/core/errors.h"
#include "plangan/envs/trajectory_log.h"
#include "plangan/planner/planner.h"

namespace plangan::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json LossesJson(const gan::TrainMetrics& m) {
  return {{"critic_loss", m.critic_loss},
          {"generator_loss", m.generator_loss},
          {"one_step_penalty", m.penalty},
          {"one_step_mse", m.one_step_mse}};
}

gan::TrainMetrics LossesFromJson(const json& j) {
  return {j.at("critic_loss").get<double>(), j.at("generator_loss").get<double>(),
          j.at("one_step_penalty").get<double>(), j.at("one_step_mse").get<double>()};
}

std::vector<double> ToStd(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> ReadLines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Keeps the first n lines of a file.
void TruncateLines(const fs::path& path, std::size_t n) {
  auto lines = ReadLines(path);
  if (lines.size() < n) throw IoError(path.string() + " is shorter than its checkpoint");
  lines.resize(n);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  WriteText(path, text);
}

// Appends lines and counts them, flushing after every write.
class LineWriter {
 public:
  LineWriter(const fs::path& path, std::size_t existing_lines)
      : out_(path, std::ios::app), count_(existing_lines), path_(path) {
    if (!out_) throw IoError("cannot open " + path.string());
  }
  void Write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
    ++count_;
  }
  std::size_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::size_t count_;
  fs::path path_;
};

gan::TrainMetrics MeanLosses(const gan::TrainMetrics& sum, int n) {
  if (n == 0) return {};
  const double d = static_cast<double>(n);
  return {sum.critic_loss / d, sum.generator_loss / d, sum.penalty / d, sum.one_step_mse / d};
}

void Accumulate(gan::TrainMetrics& sum, const gan::TrainMetrics& m) {
  sum.critic_loss += m.critic_loss;
  sum.generator_loss += m.generator_loss;
  sum.penalty += m.penalty;
  sum.one_step_mse += m.one_step_mse;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

struct RunState {
  std::string phase = "start";  // start | pretrained | complete
  std::int64_t episode = 0;     // completed phase-3 episodes
  Rng rng;
  std::deque<bool> window;
  std::size_t metrics_lines = 0;
  std::size_t episode_log_lines = 0;
};

void SaveCheckpoint(const fs::path& out_dir, const RunConfig& config, const RunState& state,
                    const gan::GanEnsemble& ensemble, const replay::ReplayBuffer& buffer,
                    const RunMetrics& metrics) {
  const fs::path tmp = out_dir / "checkpoint.tmp";
  const fs::path final_dir = out_dir / "checkpoint";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  ensemble.Save(tmp / "ensemble");
  buffer.Save(tmp / "replay");
  const json manifest = {
      {"format", "plangan-run-checkpoint"},
      {"version", 1},
      {"config_hash", config.Hash()},
      {"config", config.ToText()},
      {"phase", state.phase},
      {"episode", state.episode},
      {"train_steps", ensemble.train_steps()},
      {"env_steps", buffer.env_steps()},
      {"env_step_calls", metrics.env_step_calls},
      {"random_trajectories", metrics.random_trajectories},
      {"rng", state.rng.Serialize()},
      {"rolling_window", std::vector<bool>(state.window.begin(), state.window.end())},
      {"metrics_lines", state.metrics_lines},
      {"episode_log_lines", state.episode_log_lines},
      {"ensemble_members", ensemble.member_count()},
      {"one_step_models", ensemble.models().size()},
  };
  WriteText(tmp / "manifest.json", manifest.dump(2) + "\n");
  fs::remove_all(final_dir);
  fs::rename(tmp, final_dir);
}

void WriteSuccessCsv(const fs::path& path, const RunMetrics& metrics) {
  std::string text = "env_steps,success_rate\n";
  for (const auto& e : metrics.episodes) {
    text += std::to_string(e.env_steps) + "," + json(e.rolling_success_rate).dump() + "\n";
  }
  WriteText(path, text);
}

// Rebuilds episode and loss records from the retained metrics lines.
void ReloadRecords(const fs::path& metrics_path, RunMetrics& metrics) {
  for (const auto& line : ReadLines(metrics_path)) {
    const json j = json::parse(line);
    const std::string type = j.at("record");
    if (type == "episode") {
      EpisodeRecord r;
      r.episode = j.at("episode");
      r.env_steps = j.at("env_steps");
      r.success = j.at("success");
      r.rolling_success_rate = j.at("rolling_success_rate");
      r.losses = LossesFromJson(j);
      metrics.episodes.push_back(r);
    } else if (type == "pretrain") {
      metrics.pretrain_losses.push_back({j.at("train_step").get<std::int64_t>(), LossesFromJson(j)});
    }
  }
}

}  // namespace

json EpisodeRecord::ToJson(Ablation ablation) const {
  json j = {{"record", "episode"},
            {"variant", ToString(ablation)},
            {"episode", episode},
            {"env_steps", env_steps},
            {"success", success},
            {"rolling_success_rate", rolling_success_rate}};
  j.update(LossesJson(losses));
  return j;
}

std::optional<double> RunMetrics::final_rolling_success_rate() const {
  if (episodes.empty()) return std::nullopt;
  return episodes.back().rolling_success_rate;
}

json RunMetrics::Summary(Ablation ablation) const {
  std::int64_t successes = 0;
  for (const auto& e : episodes) successes += e.success ? 1 : 0;
  json j = {{"record", "summary"},
            {"variant", ToString(ablation)},
            {"episodes", episodes.size()},
            {"successes", successes},
            {"env_steps", env_steps},
            {"env_step_calls", env_step_calls},
            {"random_trajectories", random_trajectories},
            {"train_steps", train_steps}};
  const auto rate = final_rolling_success_rate();
  j["final_rolling_success_rate"] = rate ? json(*rate) : json(nullptr);
  return j;
}

replay::Trajectory RandomTrajectory(const envs::GoalEnv& env, Rng& rng) {
  replay::Trajectory t;
  envs::Observation obs = env.Reset(rng);
  t.states.push_back(obs.state);
  t.achieved_goals.push_back(obs.achieved_goal);
  for (int i = 0; i < env.spec().episode_length; ++i) {
    const Vector a = env.RandomAction(rng);
    obs = env.Step(obs.state, a);
    t.actions.push_back(a);
    t.states.push_back(obs.state);
    t.achieved_goals.push_back(obs.achieved_goal);
  }
  return t;
}

RunMetrics RunTraining(const RunConfig& config, const RunOptions& options) {
  config.Validate();
  const auto base_env = envs::MakeEnv(config.environment, config.horizon);
  CountingEnv env(*base_env);
  const fs::path out = config.output_dir;
  const fs::path metrics_path = out / "metrics.jsonl";
  const fs::path episodes_path = out / "episodes.jsonl";
  const fs::path checkpoint = out / "checkpoint";

  gan::GanEnsemble ensemble(env.spec(), config.ensemble, DeriveSeed(config.seed, 1));
  replay::ReplayBuffer buffer(config.replay_capacity, env.spec().epsilon);
  RunState state;
  state.rng = Rng(DeriveSeed(config.seed, 2));
  RunMetrics metrics;

  const bool resuming = options.resume && fs::exists(checkpoint / "manifest.json");
  if (resuming) {
    const json manifest = ReadCheckpointManifest(checkpoint);
    if (manifest.at("config_hash") != config.Hash())
      throw ConfigError("checkpoint in " + out.string() + " was written with a different config");
    ensemble.Load(checkpoint / "ensemble");
    buffer = replay::ReplayBuffer::Load(checkpoint / "replay");
    state.phase = manifest.at("phase");
    state.episode = manifest.at("episode");
    state.rng = Rng::Deserialize(manifest.at("rng").get<std::string>());
    for (bool s : manifest.at("rolling_window")) state.window.push_back(s);
    state.metrics_lines = manifest.at("metrics_lines");
    state.episode_log_lines = manifest.at("episode_log_lines");
    metrics.env_step_calls = manifest.at("env_step_calls");
    metrics.random_trajectories = manifest.at("random_trajectories");
    env.set_steps(metrics.env_step_calls);
    TruncateLines(metrics_path, state.metrics_lines);
    TruncateLines(episodes_path, state.episode_log_lines);
    ReloadRecords(metrics_path, metrics);
  } else {
    fs::create_directories(out);
    fs::remove_all(checkpoint);
    WriteText(metrics_path, "");
    fs::remove(episodes_path);
    fs::remove(out / "success.csv");
  }
  WriteText(out / "config.txt", config.ToText());

  LineWriter metrics_out(metrics_path, state.metrics_lines);
  json log_header = env.Constants();
  log_header["config_hash"] = config.Hash();
  // Writes the header line only when the file is new.
  envs::TrajectoryLogWriter episode_log(episodes_path, log_header, env.spec().epsilon,
                                        /*append=*/true);
  if (state.episode_log_lines == 0) state.episode_log_lines = 1;

  const auto finish_metrics = [&] {
    metrics.env_steps = buffer.env_steps();
    metrics.env_step_calls = env.steps();
    metrics.train_steps = ensemble.train_steps();
  };

  if (state.phase == "start") {
    auto t0 = std::chrono::steady_clock::now();
    const std::int64_t max_attempts = 1000LL * config.initial_trajectories;
    while (static_cast<int>(buffer.size()) < config.initial_trajectories) {
      if (metrics.random_trajectories == max_attempts)
        throw ConfigError("random trajectories almost never pass the replay filter");
      buffer.Store(RandomTrajectory(env, state.rng));
      ++metrics.random_trajectories;
    }
    metrics.phase_seconds[0] = Seconds(t0);

    t0 = std::chrono::steady_clock::now();
    for (int step = 1; step <= config.initial_train_steps; ++step) {
      const gan::TrainMetrics m = ensemble.TrainStep(buffer);
      if (step % config.loss_log_every == 0 || step == config.initial_train_steps) {
        metrics.pretrain_losses.push_back({step, m});
        json j = {{"record", "pretrain"}, {"variant", ToString(config.ablation)},
                  {"train_step", step}};
        j.update(LossesJson(m));
        metrics_out.Write(j);
      }
    }
    metrics.phase_seconds[1] = Seconds(t0);
    state.phase = "pretrained";
    state.metrics_lines = metrics_out.count();
    finish_metrics();
    SaveCheckpoint(out, config, state, ensemble, buffer, metrics);
  }

  const auto t_phase3 = std::chrono::steady_clock::now();
  while (state.phase == "pretrained" && state.episode < config.episodes) {
    const std::int64_t e = state.episode + 1;
    const Vector goal = env.SampleGoal(state.rng);
    replay::Trajectory trajectory = planner::PlanEpisode(env, ensemble, goal, config.planner,
                                                         state.rng);
    const bool success = env.Achieves(trajectory.achieved_goals.back(), goal);
    episode_log.Append(e, trajectory);
    episode_log.Flush();
    state.episode_log_lines += trajectory.achieved_goals.size();
    buffer.Store(std::move(trajectory));

    gan::TrainMetrics sum;
    for (int p = 0; p < config.train_steps_per_episode; ++p) Accumulate(sum, ensemble.TrainStep(buffer));

    state.window.push_back(success);
    if (static_cast<int>(state.window.size()) > config.rolling_window) state.window.pop_front();
    int hits = 0;
    for (bool s : state.window) hits += s ? 1 : 0;

    EpisodeRecord record;
    record.episode = e;
    record.env_steps = buffer.env_steps();
    record.success = success;
    record.rolling_success_rate = static_cast<double>(hits) / static_cast<double>(state.window.size());
    record.losses = MeanLosses(sum, config.train_steps_per_episode);
    metrics.episodes.push_back(record);
    metrics_out.Write(record.ToJson(config.ablation));
    state.episode = e;
    state.metrics_lines = metrics_out.count();

    const bool halt = options.halt_after_episode && *options.halt_after_episode == e;
    const bool cadence = config.checkpoint_every > 0 && e % config.checkpoint_every == 0;
    if (halt || cadence) {
      finish_metrics();
      SaveCheckpoint(out, config, state, ensemble, buffer, metrics);
    }
    if (halt) {
      metrics.phase_seconds[2] = Seconds(t_phase3);
      metrics.completed = false;
      return metrics;
    }
  }
  metrics.phase_seconds[2] = Seconds(t_phase3);

  finish_metrics();
  if (state.phase != "complete") {
    metrics_out.Write(metrics.Summary(config.ablation));
    state.phase = "complete";
    state.metrics_lines = metrics_out.count();
    SaveCheckpoint(out, config, state, ensemble, buffer, metrics);
  }
  WriteSuccessCsv(out / "success.csv", metrics);
  const json timing = {{"random_phase_seconds", metrics.phase_seconds[0]},
                       {"pretrain_phase_seconds", metrics.phase_seconds[1]},
                       {"planning_phase_seconds", metrics.phase_seconds[2]},
                       {"resumed", resuming}};
  WriteText(out / "timing.json", timing.dump(2) + "\n");
  metrics.completed = true;
  return metrics;
}

RunMetrics RunAblation(const RunConfig& base, Ablation variant, const RunOptions& options) {
  RunConfig config = base;
  ApplyAblation(config, variant);
  return RunTraining(config, options);
}

json GoalResult::ToJson() const {
  return {{"goal", ToStd(goal)},
          {"final_achieved_goal", ToStd(final_achieved)},
          {"final_distance", final_distance},
          {"success", success}};
}

json EvaluationReport::ToJson() const {
  json j = {{"record", "evaluation"},
            {"n_goals", goals.size()},
            {"successes", successes},
            {"success_rate_defined", success_rate.has_value()}};
  j["success_rate"] = success_rate ? json(*success_rate) : json(nullptr);
  j["goals"] = json::array();
  for (const auto& g : goals) j["goals"].push_back(g.ToJson());
  return j;
}

namespace {

template <typename RunEpisode>
EvaluationReport EvaluateWith(const envs::GoalEnv& env, int n_goals, std::uint64_t seed,
                              RunEpisode run_episode) {
  if (n_goals < 0) throw ConfigError("number of evaluation goals must be >= 0");
  Rng goal_rng(DeriveSeed(seed, 0));
  Rng episode_rng(DeriveSeed(seed, 1));
  EvaluationReport report;
  for (int i = 0; i < n_goals; ++i) {
    GoalResult r;
    r.goal = env.SampleGoal(goal_rng);
    const replay::Trajectory t = run_episode(r.goal, episode_rng);
    r.final_achieved = t.achieved_goals.back();
    r.final_distance = (r.final_achieved - r.goal).norm();
    r.success = env.Achieves(r.final_achieved, r.goal);
    report.successes += r.success ? 1 : 0;
    report.goals.push_back(std::move(r));
  }
  if (n_goals > 0)
    report.success_rate = static_cast<double>(report.successes) / static_cast<double>(n_goals);
  return report;
}

}  // namespace

EvaluationReport Evaluate(const envs::GoalEnv& env, const gan::TrajectoryGenerator& generator,
                          const planner::PlannerConfig& config, int n_goals, std::uint64_t seed) {
  return EvaluateWith(env, n_goals, seed, [&](const Vector& goal, Rng& rng) {
    return planner::PlanEpisode(env, generator, goal, config, rng);
  });
}

EvaluationReport EvaluateRandomPolicy(const envs::GoalEnv& env, int n_goals, std::uint64_t seed) {
  return EvaluateWith(env, n_goals, seed,
                      [&](const Vector&, Rng& rng) { return RandomTrajectory(env, rng); });
}

json ReadCheckpointManifest(const fs::path& checkpoint) {
  std::ifstream in(checkpoint / "manifest.json");
  if (!in) throw IoError("cannot read " + (checkpoint / "manifest.json").string());
  try {
    json j;
    in >> j;
    if (j.value("format", "") != "plangan-run-checkpoint")
      throw LoadError("manifest.json", "not a run checkpoint manifest");
    return j;
  } catch (const json::exception& e) {
    throw LoadError("manifest.json", e.what());
  }
}

EvaluationReport EvaluateCheckpoint(const fs::path& checkpoint, int n_goals, std::uint64_t seed) {
  const json manifest = ReadCheckpointManifest(checkpoint);
  RunConfig config = ParseRunConfig(manifest.at("config").get<std::string>());
  const auto env = envs::MakeEnv(config.environment, config.horizon);
  gan::GanEnsemble ensemble(env->spec(), config.ensemble, 0);
  ensemble.Load(checkpoint / "ensemble");
  return Evaluate(*env, ensemble, config.planner, n_goals, seed);
}

}  // namespace plangan::orchestrator
