#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plangan/nn/matrix.h"
#include "plangan/nn/mlp.h"

namespace plangan::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled weight penalty: p <- p - lr * weight_decay * p.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
};

// Zero moments sized to match `params`.
AdamState MakeAdamState(std::span<const std::span<double>> params, const AdamOptions& options);
AdamState MakeAdamState(MlpParams& params, const AdamOptions& options);

// Bias-corrected Adam update. Throws NumericError on a non-finite gradient,
// in which case neither parameters nor state change.
void AdamStep(std::span<const std::span<double>> params,
              std::span<const std::span<double>> grads, AdamState& state);
void AdamStep(MlpParams& params, MlpGrads& grads, AdamState& state);

}  // namespace plangan::nn
