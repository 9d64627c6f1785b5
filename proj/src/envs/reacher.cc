#include "plangan/envs/reacher.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plangan/core/errors.h"

namespace plangan::envs {
namespace {

double WrapAngle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

Reacher::Reacher(ReacherConstants constants) : constants_(constants) {
  spec_.id = "reacher";
  spec_.state_dim = 11;
  spec_.action_dim = 3;
  spec_.goal_dim = 2;
  spec_.action_low = Vector::Constant(3, -1.0);
  spec_.action_high = Vector::Constant(3, 1.0);
  spec_.episode_length = constants_.episode_length;
  spec_.epsilon = constants_.epsilon;
}

double Reacher::max_reach() const {
  const auto& l = constants_.link_lengths;
  return l[0] + l[1] + l[2];
}

std::array<double, 2> Reacher::Fingertip(const std::array<double, 3>& angles) const {
  double x = 0.0, y = 0.0, heading = 0.0;
  for (int i = 0; i < 3; ++i) {
    heading += angles[i];
    x += constants_.link_lengths[i] * std::cos(heading);
    y += constants_.link_lengths[i] * std::sin(heading);
  }
  return {x, y};
}

Vector Reacher::MakeState(const std::array<double, 3>& angles,
                          const std::array<double, 3>& velocities) const {
  Vector s(11);
  for (int i = 0; i < 3; ++i) {
    s[2 * i] = std::cos(angles[i]);
    s[2 * i + 1] = std::sin(angles[i]);
    s[6 + i] = velocities[i];
  }
  const auto tip = Fingertip(angles);
  s[9] = tip[0];
  s[10] = tip[1];
  return s;
}

Vector Reacher::ResetState(Rng& rng) const {
  const double lim = constants_.joint_limit;
  const std::array<double, 3> angles = {rng.Uniform(-std::numbers::pi, std::numbers::pi),
                                        rng.Uniform(-lim, lim), rng.Uniform(-lim, lim)};
  return MakeState(angles, {0.0, 0.0, 0.0});
}

Vector Reacher::StepState(const Vector& state, const Vector& action) const {
  if (state.size() != 11) throw ConfigError("reacher: state must have 11 components");
  const Vector torque = ClipAction(action);
  const double dt = constants_.dt;
  const double lim = constants_.joint_limit;
  std::array<double, 3> angles{}, vel{};
  for (int i = 0; i < 3; ++i) {
    angles[i] = std::atan2(state[2 * i + 1], state[2 * i]);
    vel[i] = constants_.damping * state[6 + i] + torque[i] * dt / constants_.inertia;
    angles[i] += vel[i] * dt;
  }
  angles[0] = WrapAngle(angles[0]);
  for (int i = 1; i < 3; ++i) {
    if (angles[i] > lim || angles[i] < -lim) {
      angles[i] = std::clamp(angles[i], -lim, lim);
      vel[i] = 0.0;
    }
  }
  return MakeState(angles, vel);
}

Vector Reacher::AchievedGoal(const Vector& state) const { return state.tail(2); }

Vector Reacher::AchievedGoalRow(const DenseMatrix& states, Eigen::Index row) const {
  return states.row(row).tail(2).transpose();
}

Vector Reacher::SampleGoal(Rng& rng) const {
  // Uniform over the annulus: radius via inverse CDF of r^2.
  const double r_min = constants_.goal_min_radius;
  const double r_max = max_reach();
  const double r = std::sqrt(rng.Uniform(r_min * r_min, r_max * r_max));
  const double phi = rng.Uniform(-std::numbers::pi, std::numbers::pi);
  Vector g(2);
  g << r * std::cos(phi), r * std::sin(phi);
  return g;
}

nlohmann::json Reacher::Constants() const {
  return {{"env", spec_.id},
          {"link_lengths", constants_.link_lengths},
          {"dt", constants_.dt},
          {"damping", constants_.damping},
          {"inertia", constants_.inertia},
          {"joint_limit", constants_.joint_limit},
          {"goal_min_radius", constants_.goal_min_radius},
          {"episode_length", constants_.episode_length},
          {"epsilon", constants_.epsilon}};
}

}  // namespace plangan::envs
