#include "plangan/nn/adam.h"

#include <cmath>

#include "plangan/core/errors.h"

namespace plangan::nn {

AdamState MakeAdamState(std::span<const std::span<double>> params,
                        const AdamOptions& options) {
  AdamState state;
  state.options = options;
  for (const auto& p : params) {
    state.first_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size())));
    state.second_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(p.size())));
  }
  return state;
}

AdamState MakeAdamState(MlpParams& params, const AdamOptions& options) {
  const auto views = ParamViews(params);
  return MakeAdamState(views, options);
}

void AdamStep(std::span<const std::span<double>> params,
              std::span<const std::span<double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw ConfigError("Adam: parameter/gradient/state tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() ||
        static_cast<Eigen::Index>(params[i].size()) != state.first_moment[i].size())
      throw ConfigError("Adam: tensor " + std::to_string(i) + " shape mismatch");
    for (double g : grads[i])
      if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient");
  }

  const AdamOptions& o = state.options;
  const std::int64_t t = state.step + 1;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Vector> p(params[i].data(), static_cast<Eigen::Index>(params[i].size()));
    Eigen::Map<const Vector> g(grads[i].data(), static_cast<Eigen::Index>(grads[i].size()));
    Vector& m = state.first_moment[i];
    Vector& v = state.second_moment[i];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseAbs2();
    if (o.weight_decay != 0.0) p *= 1.0 - o.learning_rate * o.weight_decay;
    p.array() -= o.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + o.epsilon);
  }
  state.step = t;
}

void AdamStep(MlpParams& params, MlpGrads& grads, AdamState& state) {
  const auto p = ParamViews(params);
  const auto g = GradViews(grads);
  AdamStep(p, g, state);
}

}  // namespace plangan::nn
