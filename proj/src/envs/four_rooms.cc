#include "plangan/envs/four_rooms.h"

#include <algorithm>

#include "plangan/core/errors.h"

namespace plangan::envs {

FourRooms::FourRooms(FourRoomsConstants constants) : constants_(constants) {
  spec_.id = "four_rooms";
  spec_.state_dim = 4;
  spec_.action_dim = 2;
  spec_.goal_dim = 2;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.episode_length = constants_.episode_length;
  spec_.epsilon = constants_.epsilon;

  const double h = constants_.wall_half_thickness;
  const double half_door = constants_.door_width / 2.0;
  // Wall pieces between the outer boundary and the doorways at 0.25 / 0.75.
  const double pieces[3][2] = {{0.0, 0.25 - half_door},
                               {0.25 + half_door, 0.75 - half_door},
                               {0.75 + half_door, 1.0}};
  for (const auto& p : pieces) {
    walls_.push_back({0.5 - h, p[0], 0.5 + h, p[1]});  // vertical wall
    walls_.push_back({p[0], 0.5 - h, p[1], 0.5 + h});  // horizontal wall
  }
}

bool FourRooms::Blocked(double x, double y) const {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) return true;
  return std::any_of(walls_.begin(), walls_.end(),
                     [&](const Rect& r) { return r.ContainsStrict(x, y); });
}

Vector FourRooms::ResetState(Rng& rng) const {
  Vector s = Vector::Zero(4);
  s[0] = constants_.start_x + rng.Uniform(-constants_.start_jitter, constants_.start_jitter);
  s[1] = constants_.start_y + rng.Uniform(-constants_.start_jitter, constants_.start_jitter);
  return s;
}

Vector FourRooms::StepState(const Vector& state, const Vector& action) const {
  if (state.size() != 4) throw ConfigError("four_rooms: state must have 4 components");
  const Vector a = ClipAction(action);
  const double dt = constants_.dt;
  const double vmax = constants_.max_speed;
  double x = state[0], y = state[1];
  double vx = std::clamp(state[2] + a[0] * dt, -vmax, vmax);
  double vy = std::clamp(state[3] + a[1] * dt, -vmax, vmax);

  double nx = x + vx * dt;
  for (const Rect& r : walls_) {
    if (!(y > r.y0 && y < r.y1)) continue;
    if (vx > 0.0 && x <= r.x0 && nx > r.x0) {
      nx = r.x0;
      vx = 0.0;
    } else if (vx < 0.0 && x >= r.x1 && nx < r.x1) {
      nx = r.x1;
      vx = 0.0;
    }
  }
  if (nx < 0.0 || nx > 1.0) {
    nx = std::clamp(nx, 0.0, 1.0);
    vx = 0.0;
  }

  double ny = y + vy * dt;
  for (const Rect& r : walls_) {
    if (!(nx > r.x0 && nx < r.x1)) continue;
    if (vy > 0.0 && y <= r.y0 && ny > r.y0) {
      ny = r.y0;
      vy = 0.0;
    } else if (vy < 0.0 && y >= r.y1 && ny < r.y1) {
      ny = r.y1;
      vy = 0.0;
    }
  }
  if (ny < 0.0 || ny > 1.0) {
    ny = std::clamp(ny, 0.0, 1.0);
    vy = 0.0;
  }

  Vector next(4);
  next << nx, ny, vx, vy;
  return next;
}

Vector FourRooms::AchievedGoal(const Vector& state) const { return state.head(2); }

Vector FourRooms::AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const {
  return states.row(row).head(2).transpose();
}

Vector FourRooms::SampleGoal(Rng& rng) const {
  // Rejection sampling over the free space; walls cover under 10% of the area.
  for (;;) {
    const double x = rng.Uniform(0.0, 1.0);
    const double y = rng.Uniform(0.0, 1.0);
    if (!Blocked(x, y)) {
      Vector g(2);
      g << x, y;
      return g;
    }
  }
}

nlohmann::json FourRooms::Constants() const {
  return {{"env", spec_.id},
          {"dt", constants_.dt},
          {"max_speed", constants_.max_speed},
          {"wall_half_thickness", constants_.wall_half_thickness},
          {"door_width", constants_.door_width},
          {"start", {constants_.start_x, constants_.start_y}},
          {"start_jitter", constants_.start_jitter},
          {"episode_length", constants_.episode_length},
          {"epsilon", constants_.epsilon}};
}

}  // namespace plangan::envs
