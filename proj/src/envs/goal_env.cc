#include "plangan/envs/goal_env.h"

#include "plangan/core/errors.h"
#include "plangan/envs/four_rooms.h"
#include "plangan/envs/reacher.h"

namespace plangan::envs {

bool Achieves(const Vector& achieved, const Vector& goal, double epsilon) {
  if (achieved.size() != goal.size())
    throw ConfigError("achieves: goal dimension mismatch (" + std::to_string(achieved.size()) +
                      " vs " + std::to_string(goal.size()) + ")");
  return (achieved - goal).norm() <= epsilon;
}

Observation GoalEnv::Reset(Rng& rng) const {
  Observation obs;
  obs.state = ResetState(rng);
  obs.achieved_goal = AchievedGoal(obs.state);
  return obs;
}

Observation GoalEnv::Reset(std::uint64_t seed) const {
  Rng rng(seed);
  return Reset(rng);
}

Observation GoalEnv::Step(const Vector& state, const Vector& action) const {
  Observation obs;
  obs.state = StepState(state, action);
  obs.achieved_goal = AchievedGoal(obs.state);
  return obs;
}

Vector GoalEnv::AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const {
  return AchievedGoal(states.row(row).transpose());
}

DenseMatrix GoalEnv::AchievedGoals(const DenseMatrix& states) const {
  if (states.cols() != spec().state_dim) throw ConfigError("AchievedGoals: state width mismatch");
  DenseMatrix goals(states.rows(), spec().goal_dim);
  for (Eigen::Index r = 0; r < states.rows(); ++r)
    goals.row(r) = AchievedGoalRow(states, r).transpose();
  return goals;
}

Vector GoalEnv::ClipAction(const Vector& action) const {
  const GoalEnvSpec& s = spec();
  if (action.size() != s.action_dim) throw ConfigError("action dimension mismatch");
  if (!action.allFinite()) throw NumericError("non-finite action");
  return action.cwiseMax(s.action_low).cwiseMin(s.action_high);
}

Vector GoalEnv::RandomAction(Rng& rng) const {
  const GoalEnvSpec& s = spec();
  Vector a(s.action_dim);
  for (int i = 0; i < s.action_dim; ++i) a[i] = rng.Uniform(s.action_low[i], s.action_high[i]);
  return a;
}

std::unique_ptr<GoalEnv> MakeEnv(const std::string& id) {
  if (id == "four_rooms") return std::make_unique<FourRooms>();
  if (id == "reacher") return std::make_unique<Reacher>();
  throw ConfigError("unknown environment '" + id + "' (expected four_rooms or reacher)");
}

std::unique_ptr<GoalEnv> MakeEnv(const std::string& id, int episode_length) {
  if (episode_length < 1) throw ConfigError("episode length must be >= 1");
  if (id == "four_rooms") {
    FourRoomsConstants c;
    c.episode_length = episode_length;
    return std::make_unique<FourRooms>(c);
  }
  if (id == "reacher") {
    ReacherConstants c;
    c.episode_length = episode_length;
    return std::make_unique<Reacher>(c);
  }
  return MakeEnv(id);
}

}  // namespace plangan::envs
