#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plangan/core/rng.h"
#include "plangan/envs/goal_env.h"
#include "plangan/gan/ensemble.h"
#include "plangan/replay/trajectory.h"

namespace plangan::planner {

using nn::DenseMatrix;
using nn::Vector;

enum class SelectionMode { kMax, kSoftmax };
enum class Variant {
  kFull,          // propose, imagine, score, select
  kNoPlanner,     // execute the first action proposed by a random member
  kNoPlannerAvg,  // unweighted mean of the Q proposals, no scoring
};

std::string ToString(SelectionMode mode);
std::string ToString(Variant variant);
SelectionMode ParseSelectionMode(const std::string& text);
Variant ParseVariant(const std::string& text);

struct PlannerConfig {
  int proposals = 25;  // Q
  int copies = 100;    // C
  int horizon = 50;    // T
  double alpha = 5.0;
  SelectionMode mode = SelectionMode::kSoftmax;
  Variant variant = Variant::kFull;

  void Validate() const;
};

struct Proposal {
  Vector action;
  Vector next_state;
  int member = 0;
};

struct ScoredProposal {
  Vector action;
  Vector next_state;
  double raw_score = 0.0;
  double normalized_score = 0.0;
};

// Q proposals, each from an independently uniform member with fresh noise.
// Proposal q draws from the stream DeriveSeed(seed, 0, q).
std::vector<Proposal> ProposeInitial(const gan::TrajectoryGenerator& generator,
                                     const Vector& state, const Vector& goal, int count,
                                     std::uint64_t seed);

struct Futures {
  // copies x (horizon + 1) x state_dim; row 0 of each sequence is s_q.
  std::vector<DenseMatrix> sequences;
  std::vector<std::int64_t> member_counts;
};

// C imagined rollouts of `horizon` steps from the proposal's next state, each
// step generated by a fresh uniformly chosen member. Copy c draws from the
// stream DeriveSeed(seed, c).
Futures SimulateFutures(const gan::TrajectoryGenerator& generator, const Proposal& proposal,
                        const Vector& goal, int copies, int horizon, std::uint64_t seed);

// Fraction of the states (rows) whose goal projection achieves `goal`.
double ScoreRollout(const envs::GoalEnv& env, const DenseMatrix& states, const Vector& goal);

// Min-max normalization to [0, 1]; returns nullopt when all scores are equal.
std::optional<std::vector<double>> NormalizeScores(const std::vector<double>& raw);

// Fills normalized scores in place and returns the selected action. Max mode
// returns the first highest-scoring proposal's action; softmax mode returns
// sum_q exp(alpha n_q) a_q / sum_q exp(alpha n_q). When all raw scores tie,
// max mode returns proposal 0 and softmax mode the plain mean.
Vector SelectAction(std::vector<ScoredProposal>& proposals, SelectionMode mode, double alpha);

struct PlanDecision {
  Vector action;
  std::vector<ScoredProposal> proposals;
  std::vector<std::int64_t> member_counts;
};

// One receding-horizon planning step from `state`. All randomness derives
// from `seed`; the result does not depend on how rollouts are batched.
PlanDecision PlanStep(const envs::GoalEnv& env, const gan::TrajectoryGenerator& generator,
                      const Vector& state, const Vector& goal, const PlannerConfig& config,
                      std::uint64_t seed);

// Optional per-step diagnostics sink; receives one JSON record per real step.
using DiagnosticsSink = std::function<void(const nlohmann::json&)>;

// Resets the environment, then plans and executes T real steps toward `goal`.
replay::Trajectory PlanEpisode(const envs::GoalEnv& env,
                               const gan::TrajectoryGenerator& generator, const Vector& goal,
                               const PlannerConfig& config, Rng& rng,
                               const DiagnosticsSink& diagnostics = {});

}  // namespace plangan::planner
