#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "plangan/core/rng.h"
#include "plangan/nn/matrix.h"

namespace plangan::envs {

using nn::DenseMatrix;
using nn::Vector;

struct GoalEnvSpec {
  std::string id;
  int state_dim = 0;
  int action_dim = 0;
  int goal_dim = 0;
  Vector action_low;
  Vector action_high;
  int episode_length = 50;
  double epsilon = 0.05;  // success radius in goal space
};

struct Observation {
  Vector state;
  Vector achieved_goal;
};

// True iff ||achieved - goal||_2 <= epsilon. Throws ConfigError on a
// dimension mismatch.
bool Achieves(const Vector& achieved, const Vector& goal, double epsilon);

// Goal-conditioned environment with a deterministic transition function.
// Instances hold only constants, so every method is const and instances may be
// shared across threads.
class GoalEnv {
 public:
  virtual ~GoalEnv() = default;

  virtual const GoalEnvSpec& spec() const = 0;

  // Samples s_0 from the initial-state distribution.
  virtual Vector ResetState(Rng& rng) const = 0;
  // Pure transition; the action is clipped to the action box first. Throws
  // NumericError on a non-finite action.
  virtual Vector StepState(const Vector& state, const Vector& action) const = 0;
  virtual Vector AchievedGoal(const Vector& state) const = 0;
  virtual Vector SampleGoal(Rng& rng) const = 0;
  // Constants echoed into log headers.
  virtual nlohmann::json Constants() const = 0;

  Observation Reset(Rng& rng) const;
  Observation Reset(std::uint64_t seed) const;
  Observation Step(const Vector& state, const Vector& action) const;

  // Row-wise goal projection of a batch of states.
  DenseMatrix AchievedGoals(const DenseMatrix& states) const;

  bool Achieves(const Vector& achieved, const Vector& goal) const {
    return envs::Achieves(achieved, goal, spec().epsilon);
  }

  Vector ClipAction(const Vector& action) const;
  Vector RandomAction(Rng& rng) const;

 protected:
  // Goal projection of state row `row`; used by AchievedGoals.
  virtual Vector AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const;
};

// "four_rooms" or "reacher". Throws ConfigError for anything else.
std::unique_ptr<GoalEnv> MakeEnv(const std::string& id);
// Same, with episode length T overridden. Throws ConfigError when T < 1.
std::unique_ptr<GoalEnv> MakeEnv(const std::string& id, int episode_length);

}  // namespace plangan::envs
