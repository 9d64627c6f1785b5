#pragma once

#include <optional>
#include <vector>

#include "plangan/nn/matrix.h"

namespace plangan::replay {

using nn::Vector;

// One episode: T+1 states, T actions, T+1 achieved goals, and the goal the
// agent was pursuing (absent for random-action episodes).
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::vector<Vector> achieved_goals;
  std::optional<Vector> desired_goal;

  int length() const { return static_cast<int>(actions.size()); }

  // Throws ConfigError when the lengths or per-step dimensions disagree.
  void Validate() const;

  bool operator==(const Trajectory&) const = default;
};

}  // namespace plangan::replay
