#pragma once

#include "plangan/envs/goal_env.h"

namespace plangan::envs {

// s' = A s + B a on R^2 with a in [-1, 1]^2. Goal space is the state itself.
// Used to check that one-step models fit exactly representable dynamics.
class LinearToy final : public GoalEnv {
 public:
  LinearToy();

  const GoalEnvSpec& spec() const override { return spec_; }
  Vector ResetState(Rng& rng) const override;
  Vector StepState(const Vector& state, const Vector& action) const override;
  Vector AchievedGoal(const Vector& state) const override { return state; }
  Vector SampleGoal(Rng& rng) const override;
  nlohmann::json Constants() const override;

  const DenseMatrix& state_matrix() const { return a_; }
  const DenseMatrix& input_matrix() const { return b_; }

 private:
  GoalEnvSpec spec_;
  DenseMatrix a_;
  DenseMatrix b_;
};

}  // namespace plangan::envs
