#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "plangan/gan/ensemble.h"
#include "plangan/planner/planner.h"

namespace plangan::orchestrator {

enum class Ablation { kFull, kNoPlanner, kNoPlannerAvg, kLambda0, kEnsemble1, kEnsemble5 };

std::string ToString(Ablation ablation);
// Accepts full, no-planner, no-planner-avg, lambda0 (or "λ=0"), ensemble-1,
// ensemble-5. Throws ConfigError otherwise.
Ablation ParseAblation(const std::string& text);

struct RunConfig {
  std::string environment = "four_rooms";
  int initial_trajectories = 250;     // J
  int initial_train_steps = 100000;   // Y
  int episodes = 1500;                // E
  int train_steps_per_episode = 250;  // P
  int horizon = 50;                   // T, both episode length and planning horizon
  gan::EnsembleConfig ensemble;
  planner::PlannerConfig planner;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  std::size_t replay_capacity = 5000;
  int checkpoint_every = 25;  // phase-3 episodes between checkpoints; 0 = only at the end
  int rolling_window = 50;
  int loss_log_every = 500;   // phase-2 train steps between loss records
  std::filesystem::path output_dir = "run";

  // Throws ConfigError on any out-of-range field.
  void Validate() const;

  // Every key in canonical order, one "key = value" line each. Parsing the
  // result reproduces the config exactly.
  std::string ToText() const;
  nlohmann::json ToJson() const;
  // FNV-1a over ToText() without the output directory.
  std::string Hash() const;
};

// Defaults for one environment: the hyperparameter table, with alpha-weighted
// softmax selection on Four Rooms and max-score selection on Reacher.
RunConfig DefaultConfig(const std::string& environment);

// Reduced preset for a single commodity CPU.
void ApplyDeskScale(RunConfig& config);

// Sets `ablation` and the single field it changes.
void ApplyAblation(RunConfig& config, Ablation ablation);

// Parses flat "key = value" text. Blank lines and lines starting with '#'
// are skipped. Unknown or repeated keys and malformed values are
// ConfigErrors. The result is validated.
//
// Defaults come from DefaultConfig(environment key, or four_rooms), then the
// desk-scale preset if requested, then the file's keys, then the file's
// ablation key if present.
RunConfig ParseRunConfig(const std::string& text, bool desk_scale = false);
RunConfig LoadRunConfig(const std::filesystem::path& path, bool desk_scale = false);

// Raw key/value pairs with the same syntax rules, without interpreting keys.
std::map<std::string, std::string> ParseKeyValues(const std::string& text);

}  // namespace plangan::orchestrator
