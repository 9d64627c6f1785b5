#include "plangan/orchestrator/runner.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plangan/core/errors.h"
#include "plangan/envs/four_rooms.h"
#include "plangan/nn/checkpoint.h"
#include "plangan/planner/ground_truth.h"

namespace plangan::orchestrator {
namespace {

namespace fs = std::filesystem;

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "plangan_runner_test" / name;
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<nlohmann::json> JsonLines(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

RunConfig Tiny(const std::string& name) {
  RunConfig c = DefaultConfig("four_rooms");
  c.initial_trajectories = 4;
  c.initial_train_steps = 3;
  c.episodes = 5;
  c.train_steps_per_episode = 2;
  c.horizon = 10;
  c.planner.horizon = 10;
  c.planner.proposals = 3;
  c.planner.copies = 2;
  c.ensemble.members = 2;
  c.ensemble.one_step_models = 2;
  c.ensemble.tau = 3;
  c.ensemble.gan_batch = 4;
  c.ensemble.model_batch = 8;
  c.ensemble.noise_dim = 2;
  c.ensemble.hidden_sizes = {8, 8};
  c.replay_capacity = 100;
  c.checkpoint_every = 2;
  c.rolling_window = 3;
  c.loss_log_every = 1;
  c.seed = 3;
  c.output_dir = Scratch(name);
  return c;
}

TEST(Runner, DegeneratePhasesStoreExactlyJ) {
  RunConfig c = Tiny("degenerate");
  c.initial_train_steps = 0;
  c.episodes = 0;
  const RunMetrics m = RunTraining(c);
  EXPECT_TRUE(m.completed);
  EXPECT_EQ(m.train_steps, 0);
  EXPECT_TRUE(m.episodes.empty());
  EXPECT_FALSE(m.final_rolling_success_rate());
  const auto buf = replay::ReplayBuffer::Load(c.output_dir / "checkpoint" / "replay");
  EXPECT_EQ(buf.size(), 4u);
  EXPECT_EQ(buf.stored_count() + buf.discarded_count(), m.random_trajectories);
  EXPECT_EQ(m.env_steps, 10 * m.random_trajectories);
  EXPECT_EQ(m.env_step_calls, m.env_steps);

  // No parameter updates: the saved ensemble equals a freshly seeded one.
  gan::GanEnsemble fresh(envs::MakeEnv("four_rooms", 10)->spec(), c.ensemble, DeriveSeed(c.seed, 1));
  gan::GanEnsemble saved(envs::MakeEnv("four_rooms", 10)->spec(), c.ensemble, 0);
  saved.Load(c.output_dir / "checkpoint" / "ensemble");
  EXPECT_TRUE(saved.members()[0].generator().layers[0].weight ==
              fresh.members()[0].generator().layers[0].weight);
}

TEST(Runner, BookkeepingAndOutputs) {
  const RunConfig c = Tiny("bookkeeping");
  const RunMetrics m = RunTraining(c);
  ASSERT_TRUE(m.completed);
  ASSERT_EQ(m.episodes.size(), 5u);
  EXPECT_EQ(m.train_steps, 3 + 5 * 2);
  EXPECT_EQ(m.env_steps, 10 * (m.random_trajectories + 5));
  EXPECT_EQ(m.env_step_calls, m.env_steps);
  std::int64_t previous = 0;
  for (const auto& e : m.episodes) {
    EXPECT_GE(e.env_steps, previous);
    previous = e.env_steps;
    EXPECT_GE(e.rolling_success_rate, 0.0);
    EXPECT_LE(e.rolling_success_rate, 1.0);
  }
  // Rolling rate over the last three episodes.
  const double last3 = (m.episodes[2].success + m.episodes[3].success + m.episodes[4].success) / 3.0;
  EXPECT_DOUBLE_EQ(*m.final_rolling_success_rate(), last3);

  for (const char* f : {"config.txt", "metrics.jsonl", "episodes.jsonl", "success.csv", "timing.json"})
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
  EXPECT_EQ(ParseRunConfig(Slurp(c.output_dir / "config.txt")).Hash(), c.Hash());
  const auto lines = JsonLines(c.output_dir / "metrics.jsonl");
  int pretrain = 0, episodes = 0, summary = 0;
  for (const auto& l : lines) {
    pretrain += l["record"] == "pretrain";
    episodes += l["record"] == "episode";
    summary += l["record"] == "summary";
    EXPECT_EQ(l["variant"], "full");
  }
  EXPECT_EQ(pretrain, 3);
  EXPECT_EQ(episodes, 5);
  EXPECT_EQ(summary, 1);
  EXPECT_EQ(lines.back()["record"], "summary");
  // One header plus T + 1 lines per planned episode.
  EXPECT_EQ(JsonLines(c.output_dir / "episodes.jsonl").size(), 1u + 5u * 11u);
  const auto manifest = ReadCheckpointManifest(c.output_dir / "checkpoint");
  EXPECT_EQ(manifest["phase"], "complete");
  EXPECT_EQ(manifest["config_hash"], c.Hash());
}

TEST(Runner, SeededRunsAreIdentical) {
  const RunConfig a = Tiny("repeat_a");
  RunConfig b = a;
  b.output_dir = Scratch("repeat_b");
  RunTraining(a);
  RunTraining(b);
  for (const char* f : {"metrics.jsonl", "episodes.jsonl", "success.csv"})
    EXPECT_EQ(Slurp(a.output_dir / f), Slurp(b.output_dir / f)) << f;
  EXPECT_EQ(Slurp(a.output_dir / "checkpoint/ensemble/member_0.pgan"),
            Slurp(b.output_dir / "checkpoint/ensemble/member_0.pgan"));
}

TEST(Runner, ResumeMatchesUninterruptedRun) {
  const RunConfig full = Tiny("resume_full");
  RunTraining(full);

  RunConfig part = full;
  part.output_dir = Scratch("resume_part");
  RunOptions halt;
  halt.halt_after_episode = 3;
  const RunMetrics halted = RunTraining(part, halt);
  EXPECT_FALSE(halted.completed);
  EXPECT_EQ(halted.episodes.size(), 3u);
  RunOptions resume;
  resume.resume = true;
  const RunMetrics resumed = RunTraining(part, resume);
  EXPECT_TRUE(resumed.completed);
  EXPECT_EQ(resumed.episodes.size(), 5u);
  for (const char* f : {"metrics.jsonl", "episodes.jsonl", "success.csv"})
    EXPECT_EQ(Slurp(full.output_dir / f), Slurp(part.output_dir / f)) << f;
  EXPECT_EQ(Slurp(full.output_dir / "checkpoint/ensemble/member_1.pgan"),
            Slurp(part.output_dir / "checkpoint/ensemble/member_1.pgan"));

  RunConfig other = part;
  other.seed = 4;
  EXPECT_THROW(RunTraining(other, resume), ConfigError);
}

TEST(Runner, EvaluateIsSideEffectFree) {
  const RunConfig c = Tiny("evaluate");
  RunTraining(c);
  const fs::path ck = c.output_dir / "checkpoint";
  std::map<std::string, std::string> before;
  for (const auto& e : fs::recursive_directory_iterator(ck))
    if (e.is_regular_file()) before[e.path().string()] = Slurp(e.path());
  const EvaluationReport r1 = EvaluateCheckpoint(ck, 3, 9);
  const EvaluationReport r2 = EvaluateCheckpoint(ck, 3, 9);
  std::map<std::string, std::string> after;
  for (const auto& e : fs::recursive_directory_iterator(ck))
    if (e.is_regular_file()) after[e.path().string()] = Slurp(e.path());
  EXPECT_EQ(before, after);
  ASSERT_EQ(r1.goals.size(), 3u);
  EXPECT_EQ(r1.ToJson().dump(), r2.ToJson().dump());
  EXPECT_EQ(r1.success_rate, r1.successes / 3.0);
}

TEST(Runner, ZeroGoalsGivesUndefinedRate) {
  envs::FourRooms env;
  planner::GroundTruthGenerator gen(env);
  const auto r = Evaluate(env, gen, planner::PlannerConfig{}, 0, 1);
  EXPECT_TRUE(r.goals.empty());
  EXPECT_FALSE(r.success_rate);
  EXPECT_TRUE(r.ToJson()["success_rate"].is_null());
}

TEST(Runner, CorruptCheckpointNamesTensor) {
  const RunConfig c = Tiny("corrupt");
  RunTraining(c);
  const fs::path file = c.output_dir / "checkpoint/ensemble/member_0.pgan";
  const auto archive = nn::TensorArchive::Load(file);
  // Rewrite with one tensor dropped.
  nn::TensorArchive broken;
  const std::string dropped = archive.entries()[2].first;
  for (std::size_t i = 0; i < archive.entries().size(); ++i)
    if (i != 2) {
      const auto& [name, t] = archive.entries()[i];
      broken.Put(name, t.shape, t.data);
    }
  broken.Save(file);
  try {
    EvaluateCheckpoint(c.output_dir / "checkpoint", 1, 0);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.tensor(), dropped);
  }
}

TEST(Runner, RandomPolicyRarelySucceeds) {
  envs::FourRooms env;
  const auto r = EvaluateRandomPolicy(env, 100, 7);
  EXPECT_EQ(r.goals.size(), 100u);
  EXPECT_LE(*r.success_rate, 0.05);
  Rng rng(1);
  const auto tr = RandomTrajectory(env, rng);
  EXPECT_EQ(tr.length(), 50);
  EXPECT_FALSE(tr.desired_goal);
}

TEST(Runner, AblationRunIsTagged) {
  const RunConfig base = Tiny("ablation");
  const RunMetrics m = RunAblation(base, Ablation::kNoPlanner);
  EXPECT_EQ(m.Summary(Ablation::kNoPlanner)["variant"], "no-planner");
  const auto lines = JsonLines(base.output_dir / "metrics.jsonl");
  for (const auto& l : lines) EXPECT_EQ(l["variant"], "no-planner");
  EXPECT_EQ(ParseRunConfig(Slurp(base.output_dir / "config.txt")).planner.proposals, 1);
}

TEST(Runner, InvalidConfigRejectedBeforeWork) {
  RunConfig c = Tiny("invalid");
  c.ensemble.lambda = -1.0;
  EXPECT_THROW(RunTraining(c), ConfigError);
  EXPECT_FALSE(fs::exists(c.output_dir / "metrics.jsonl"));
}

}  // namespace
}  // namespace plangan::orchestrator
