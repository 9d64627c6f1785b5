#include "plangan/envs/linear_toy.h"

#include "plangan/core/errors.h"

namespace plangan::envs {

LinearToy::LinearToy() : a_(2, 2), b_(2, 2) {
  spec_.id = "linear_toy";
  spec_.state_dim = 2;
  spec_.action_dim = 2;
  spec_.goal_dim = 2;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.episode_length = 50;
  spec_.epsilon = 0.05;
  a_ << 0.95, 0.05,  //
      -0.05, 0.95;
  b_ << 0.1, 0.0,  //
      0.02, 0.08;
}

Vector LinearToy::ResetState(Rng& rng) const {
  Vector s(2);
  s << rng.Uniform(-1.0, 1.0), rng.Uniform(-1.0, 1.0);
  return s;
}

Vector LinearToy::StepState(const Vector& state, const Vector& action) const {
  if (state.size() != 2) throw ConfigError("linear_toy: state must have 2 components");
  return a_ * state + b_ * ClipAction(action);
}

Vector LinearToy::SampleGoal(Rng& rng) const { return ResetState(rng); }

nlohmann::json LinearToy::Constants() const {
  return {{"env", spec_.id},
          {"A", {{a_(0, 0), a_(0, 1)}, {a_(1, 0), a_(1, 1)}}},
          {"B", {{b_(0, 0), b_(0, 1)}, {b_(1, 0), b_(1, 1)}}}};
}

}  // namespace plangan::envs
