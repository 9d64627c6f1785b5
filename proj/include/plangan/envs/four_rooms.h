#pragma once

#include <vector>

#include "plangan/envs/goal_env.h"

namespace plangan::envs {

// Axis-aligned closed rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0, y0, x1, y1;
  // Strict interior test; boundary points are free space.
  bool ContainsStrict(double x, double y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
};

struct FourRoomsConstants {
  double dt = 0.05;
  double max_speed = 0.5;             // per axis
  double wall_half_thickness = 0.01;
  double door_width = 0.2;
  double start_x = 0.25;              // center of the lower-left room
  double start_y = 0.25;
  double start_jitter = 0.01;
  int episode_length = 50;
  double epsilon = 0.05;
};

// Point mass in the unit square split into four rooms by one vertical and one
// horizontal wall, each with a doorway centered in every half-wall.
//
// State: (x, y, vx, vy). Action: acceleration in [-1, 1]^2.
// Goal: (x, y).
class FourRooms final : public GoalEnv {
 public:
  explicit FourRooms(FourRoomsConstants constants = {});

  const GoalEnvSpec& spec() const override { return spec_; }
  Vector ResetState(Rng& rng) const override;
  // Semi-implicit Euler with per-axis swept collision against the walls:
  // x is resolved first, then y. A blocked axis stops at the wall face with
  // zero velocity on that axis.
  Vector StepState(const Vector& state, const Vector& action) const override;
  Vector AchievedGoal(const Vector& state) const override;
  Vector SampleGoal(Rng& rng) const override;
  nlohmann::json Constants() const override;

  const std::vector<Rect>& walls() const { return walls_; }
  const FourRoomsConstants& constants() const { return constants_; }

  // True when (x, y) lies strictly inside a wall or outside the unit square.
  bool Blocked(double x, double y) const;

 protected:
  Vector AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const override;

 private:
  FourRoomsConstants constants_;
  GoalEnvSpec spec_;
  std::vector<Rect> walls_;
};

}  // namespace plangan::envs
