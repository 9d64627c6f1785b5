#include "plangan/replay/trajectory.h"

#include <string>

#include "plangan/core/errors.h"

namespace plangan::replay {

void Trajectory::Validate() const {
  const std::size_t t = actions.size();
  if (t == 0) throw ConfigError("trajectory has no actions");
  if (states.size() != t + 1)
    throw ConfigError("trajectory has " + std::to_string(states.size()) + " states for " +
                      std::to_string(t) + " actions");
  if (achieved_goals.size() != t + 1)
    throw ConfigError("trajectory has " + std::to_string(achieved_goals.size()) +
                      " achieved goals for " + std::to_string(t) + " actions");
  const auto consistent = [](const std::vector<Vector>& v) {
    for (const auto& x : v)
      if (x.size() != v.front().size() || x.size() == 0) return false;
    return true;
  };
  if (!consistent(states) || !consistent(actions) || !consistent(achieved_goals))
    throw ConfigError("trajectory entries have inconsistent dimensions");
  if (desired_goal && desired_goal->size() != achieved_goals.front().size())
    throw ConfigError("desired goal dimension differs from achieved goal dimension");
}

}  // namespace plangan::replay
