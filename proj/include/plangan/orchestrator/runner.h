#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "plangan/envs/goal_env.h"
#include "plangan/gan/ensemble.h"
#include "plangan/orchestrator/run_config.h"
#include "plangan/replay/replay_buffer.h"

namespace plangan::orchestrator {

using nn::DenseMatrix;
using nn::Vector;

// Wraps an environment and counts StepState calls.
class CountingEnv final : public envs::GoalEnv {
 public:
  explicit CountingEnv(const envs::GoalEnv& inner) : inner_(inner) {}

  const envs::GoalEnvSpec& spec() const override { return inner_.spec(); }
  Vector ResetState(Rng& rng) const override { return inner_.ResetState(rng); }
  Vector StepState(const Vector& state, const Vector& action) const override {
    ++steps_;
    return inner_.StepState(state, action);
  }
  Vector AchievedGoal(const Vector& state) const override { return inner_.AchievedGoal(state); }
  Vector SampleGoal(Rng& rng) const override { return inner_.SampleGoal(rng); }
  nlohmann::json Constants() const override { return inner_.Constants(); }

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t n) { steps_ = n; }

 private:
  const envs::GoalEnv& inner_;
  mutable std::int64_t steps_ = 0;
};

struct EpisodeRecord {
  std::int64_t episode = 0;
  std::int64_t env_steps = 0;
  bool success = false;
  double rolling_success_rate = 0.0;
  gan::TrainMetrics losses;  // mean over the P train steps after the episode

  nlohmann::json ToJson(Ablation ablation) const;
};

struct LossRecord {
  std::int64_t train_step = 0;
  gan::TrainMetrics losses;
};

struct RunMetrics {
  std::vector<EpisodeRecord> episodes;
  std::vector<LossRecord> pretrain_losses;
  std::int64_t env_steps = 0;        // from the replay buffer's counter
  std::int64_t env_step_calls = 0;   // counted at the environment
  std::int64_t random_trajectories = 0;
  std::int64_t train_steps = 0;
  bool completed = false;  // false when halted early
  double phase_seconds[3] = {0.0, 0.0, 0.0};

  std::optional<double> final_rolling_success_rate() const;
  nlohmann::json Summary(Ablation ablation) const;
};

struct RunOptions {
  // Continue from <output_dir>/checkpoint when it exists.
  bool resume = false;
  // Stop right after checkpointing phase-3 episode n (1-based); for tests.
  std::optional<std::int64_t> halt_after_episode;
};

// Full pipeline: J random trajectories, Y train steps, then E rounds of
// plan / store / P train steps. Writes into config.output_dir:
//   config.txt, metrics.jsonl, success.csv, timing.json, episodes.jsonl,
//   checkpoint/{manifest.json, ensemble/, replay/}.
// Everything except timing.json is a deterministic function of the config.
RunMetrics RunTraining(const RunConfig& config, const RunOptions& options = {});

// RunTraining on a copy of `base` with the variant applied.
RunMetrics RunAblation(const RunConfig& base, Ablation variant, const RunOptions& options = {});

struct GoalResult {
  Vector goal;
  Vector final_achieved;
  double final_distance = 0.0;
  bool success = false;

  nlohmann::json ToJson() const;
};

struct EvaluationReport {
  std::vector<GoalResult> goals;
  std::int64_t successes = 0;
  // Undefined (nullopt) when no goals were evaluated.
  std::optional<double> success_rate;

  nlohmann::json ToJson() const;
};

// n_goals planned episodes toward goals from env.SampleGoal. No training, no
// buffer writes; `generator` is only read.
EvaluationReport Evaluate(const envs::GoalEnv& env, const gan::TrajectoryGenerator& generator,
                          const planner::PlannerConfig& config, int n_goals, std::uint64_t seed);

// Loads <checkpoint>/manifest.json and the ensemble, then Evaluate. Throws
// LoadError naming the offending tensor on a corrupt checkpoint.
EvaluationReport EvaluateCheckpoint(const std::filesystem::path& checkpoint, int n_goals,
                                    std::uint64_t seed);

// Uniform random actions over the action box, same goal stream as Evaluate.
EvaluationReport EvaluateRandomPolicy(const envs::GoalEnv& env, int n_goals, std::uint64_t seed);

// Random-action trajectory of spec().episode_length steps.
replay::Trajectory RandomTrajectory(const envs::GoalEnv& env, Rng& rng);

// The parsed manifest of a checkpoint directory.
nlohmann::json ReadCheckpointManifest(const std::filesystem::path& checkpoint);

}  // namespace plangan::orchestrator
