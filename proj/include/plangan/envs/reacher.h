#pragma once

#include <array>

#include "plangan/envs/goal_env.h"

namespace plangan::envs {

struct ReacherConstants {
  std::array<double, 3> link_lengths = {0.1, 0.1, 0.1};
  double dt = 0.05;
  double damping = 0.9;       // angular velocity retained per step
  double inertia = 0.1;       // torque / inertia = angular acceleration
  double joint_limit = 3.0;   // joints 2 and 3; joint 1 wraps
  double goal_min_radius = 0.05;
  int episode_length = 50;
  double epsilon = 0.05;
};

// Planar three-link arm driven by joint torques in [-1, 1]^3.
//
// State (11): cos/sin of the three joint angles, three angular velocities,
// fingertip (x, y). Goal: fingertip (x, y).
class Reacher final : public GoalEnv {
 public:
  explicit Reacher(ReacherConstants constants = {});

  const GoalEnvSpec& spec() const override { return spec_; }
  Vector ResetState(Rng& rng) const override;
  Vector StepState(const Vector& state, const Vector& action) const override;
  Vector AchievedGoal(const Vector& state) const override;
  Vector SampleGoal(Rng& rng) const override;
  nlohmann::json Constants() const override;

  double max_reach() const;
  const ReacherConstants& constants() const { return constants_; }

  // Builds the 11-dim state from joint angles and velocities.
  Vector MakeState(const std::array<double, 3>& angles,
                   const std::array<double, 3>& velocities) const;
  std::array<double, 2> Fingertip(const std::array<double, 3>& angles) const;

 protected:
  Vector AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const override;

 private:
  ReacherConstants constants_;
  GoalEnvSpec spec_;
};

}  // namespace plangan::envs
