#include "plangan/planner/ground_truth.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "plangan/core/errors.h"

namespace plangan::planner {

namespace {

struct Point {
  double x, y;
};

int RoomOf(double x, double y) { return (x < 0.5 ? 0 : 1) + (y < 0.5 ? 0 : 2); }

double Distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Doorway between two rooms sharing a wall, with the unit normal pointing
// from room `from` into room `to`.
struct Door {
  Point center;
  Point normal;
};

Door DoorBetween(int from, int to) {
  const int fx = from & 1, fy = from >> 1, tx = to & 1, ty = to >> 1;
  if (fy == ty) return {{0.5, fy ? 0.75 : 0.25}, {tx > fx ? 1.0 : -1.0, 0.0}};
  return {{fx ? 0.75 : 0.25, 0.5}, {0.0, ty > fy ? 1.0 : -1.0}};
}

Point Waypoint(Point p, Point g) {
  constexpr double kStandoff = 0.08;
  constexpr double kAlign = 0.05;
  const int from = RoomOf(p.x, p.y);
  const int to = RoomOf(g.x, g.y);
  if (from == to) return g;
  int next = to;
  if ((from ^ to) == 3) {
    // Opposite rooms: go through whichever neighbour gives the shorter path.
    const std::array<int, 2> via = {from ^ 1, from ^ 2};
    double best = 1e9;
    for (int v : via) {
      const Point d1 = DoorBetween(from, v).center, d2 = DoorBetween(v, to).center;
      const double len = Distance(p, d1) + Distance(d1, d2) + Distance(d2, g);
      if (len < best) {
        best = len;
        next = v;
      }
    }
  }
  const Door door = DoorBetween(from, next);
  const Point approach = {door.center.x - kStandoff * door.normal.x,
                          door.center.y - kStandoff * door.normal.y};
  const Point beyond = {door.center.x + kStandoff * door.normal.x,
                        door.center.y + kStandoff * door.normal.y};
  // Offset along the wall from the doorway center.
  const double lateral = door.normal.x != 0.0 ? p.y - door.center.y : p.x - door.center.x;
  return std::abs(lateral) <= kAlign ? beyond : approach;
}

}  // namespace

GroundTruthGenerator::GroundTruthGenerator(const envs::FourRooms& env, double noise_scale,
                                           int members)
    : env_(env), noise_scale_(noise_scale), members_(members) {
  if (members < 1) throw ConfigError("ground-truth generator needs at least one member");
  if (!(noise_scale >= 0.0)) throw ConfigError("noise scale must be non-negative");
}

Vector GroundTruthGenerator::Control(const Vector& state, const Vector& goal) const {
  const auto& c = env_.constants();
  const Point w = Waypoint({state[0], state[1]}, {goal[0], goal[1]});
  const double target[2] = {w.x, w.y};
  Vector action(2);
  for (int i = 0; i < 2; ++i) {
    const double error = target[i] - state[i];
    // Fastest speed from which the mass can still stop at the target.
    const double stop_speed = std::sqrt(2.0 * 0.8 * std::abs(error));
    const double desired = std::copysign(std::min(c.max_speed, stop_speed), error);
    action[i] = std::clamp((desired - state[2 + i]) / c.dt, -1.0, 1.0);
  }
  return action;
}

gan::GeneratedStep GroundTruthGenerator::Generate(int member, const DenseMatrix& states,
                                                  const DenseMatrix& goals,
                                                  const DenseMatrix& noise) const {
  if (member < 0 || member >= members_) throw ConfigError("member index out of range");
  if (states.cols() != 4 || goals.cols() != 2 || noise.cols() != 2 ||
      goals.rows() != states.rows() || noise.rows() != states.rows())
    throw ConfigError("ground-truth generator: input shape mismatch");
  gan::GeneratedStep out{DenseMatrix(states.rows(), 2), DenseMatrix(states.rows(), 4)};
  for (Eigen::Index r = 0; r < states.rows(); ++r) {
    const Vector s = states.row(r).transpose();
    Vector a = Control(s, goals.row(r).transpose()) + noise_scale_ * noise.row(r).transpose();
    a = env_.ClipAction(a);
    out.actions.row(r) = a.transpose();
    out.next_states.row(r) = env_.StepState(s, a).transpose();
  }
  return out;
}

}  // namespace plangan::planner
