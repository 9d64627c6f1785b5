#include <malloc.h>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plangan/core/errors.h"
#include "plangan/orchestrator/run_config.h"
#include "plangan/orchestrator/runner.h"

namespace {

using namespace plangan;
using namespace plangan::orchestrator;

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;
constexpr int kIoExit = 4;

struct TrainFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool desk_scale = false;
  bool resume = false;
  std::optional<std::int64_t> halt_after;
};

void AddTrainFlags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value run configuration file");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config file)");
  cmd->add_option("--out", f.out, "output directory (overrides the config file)");
  cmd->add_flag("--desk-scale", f.desk_scale, "reduced preset for a single CPU");
  cmd->add_flag("--resume", f.resume, "continue from <out>/checkpoint if present");
  cmd->add_option("--halt-after", f.halt_after, "stop after checkpointing this episode");
}

RunConfig BuildConfig(const TrainFlags& f) {
  RunConfig config = f.config_path.empty() ? ParseRunConfig("", f.desk_scale)
                                           : LoadRunConfig(f.config_path, f.desk_scale);
  if (f.seed) config.seed = *f.seed;
  if (!f.out.empty()) config.output_dir = f.out;
  config.Validate();
  return config;
}

int Train(const RunConfig& config, const TrainFlags& f) {
  RunOptions options;
  options.resume = f.resume;
  options.halt_after_episode = f.halt_after;
  const RunMetrics metrics = RunTraining(config, options);
  nlohmann::json summary = metrics.Summary(config.ablation);
  summary["completed"] = metrics.completed;
  summary["output_dir"] = config.output_dir.string();
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Keep freed blocks in the heap: the training loop reallocates the same
  // large matrices every step.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Goal-conditioned planning with a GAN ensemble"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "run the full training pipeline");
  AddTrainFlags(train, train_flags);

  TrainFlags ablate_flags;
  std::string variant;
  auto* ablate = app.add_subcommand("ablate", "train one ablation variant");
  AddTrainFlags(ablate, ablate_flags);
  ablate->add_option("--variant", variant,
                     "no-planner | no-planner-avg | lambda0 | ensemble-1 | ensemble-5")
      ->required();

  std::string checkpoint;
  int goals = 100;
  std::uint64_t eval_seed = 0;
  bool per_goal = false;
  auto* evaluate = app.add_subcommand("evaluate", "plan toward sampled goals, no training");
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  evaluate->add_option("--goals", goals, "number of goals");
  evaluate->add_option("--seed", eval_seed, "goal and episode seed");
  evaluate->add_flag("--per-goal", per_goal, "include one record per goal");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print a checkpoint manifest");
  inspect->add_option("checkpoint", inspect_path, "checkpoint directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*train) return Train(BuildConfig(train_flags), train_flags);
    if (*ablate) {
      RunConfig config = BuildConfig(ablate_flags);
      ApplyAblation(config, ParseAblation(variant));
      config.Validate();
      return Train(config, ablate_flags);
    }
    if (*evaluate) {
      const EvaluationReport report = EvaluateCheckpoint(checkpoint, goals, eval_seed);
      nlohmann::json j = report.ToJson();
      if (!per_goal) j.erase("goals");
      std::cout << j.dump() << '\n';
      return 0;
    }
    if (*inspect) {
      std::cout << ReadCheckpointManifest(inspect_path).dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericExit;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoExit;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoExit;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericExit;
  }
  return 0;
}
