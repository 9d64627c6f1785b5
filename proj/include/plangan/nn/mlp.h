#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plangan/core/rng.h"
#include "plangan/nn/matrix.h"
#include "plangan/nn/spectral_norm.h"

namespace plangan::nn {

enum class Activation { kIdentity, kReLU, kTanh };
enum class Mode { kTrain, kEval };

struct BatchNormState {
  Vector scale;
  Vector shift;
  Vector running_mean;
  Vector running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;
};

// Fully connected layer computing y = x W^T + b. With spectral_norm set the
// forward pass uses W / sigma_hat, where sigma_hat comes from the stored
// (u, v) estimate; refreshing the estimate is an explicit, separate step.
struct DenseLayer {
  DenseMatrix weight;  // out x in
  Vector bias;         // out
  bool spectral_norm = false;
  SpectralNormState sn;
};

struct MlpSpec {
  int input_size = 0;
  std::vector<int> hidden_sizes = {512, 512};
  int output_size = 0;
  bool batch_norm = false;
  bool spectral_norm = false;
  Activation output_activation = Activation::kIdentity;
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  // One entry per hidden layer; empty optional when BatchNorm is off.
  std::vector<std::optional<BatchNormState>> batch_norms;
  Activation hidden_activation = Activation::kReLU;
  Activation output_activation = Activation::kIdentity;

  int input_size() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers.back().weight.rows()); }
};

// Weights and biases uniform in +-1/sqrt(fan_in); BatchNorm scale 1, shift 0;
// spectral-norm vectors initialized with 30 power iterations.
MlpParams MakeMlp(const MlpSpec& spec, Rng& rng);

// Throws ConfigError when consecutive layer sizes do not chain.
void ValidateMlp(const MlpParams& params);

struct LayerCache {
  DenseMatrix input;
  DenseMatrix effective_weight;
  double sigma = 1.0;
  DenseMatrix pre_activation;  // x W^T + b
  DenseMatrix normalized;      // BatchNorm x_hat (hidden layers with BN)
  Vector inv_std;              // per-feature 1/sqrt(var + eps)
  Vector batch_mean;
  Vector batch_var;  // biased
  DenseMatrix output;          // post-activation
};

struct ForwardCache {
  Mode mode = Mode::kTrain;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  DenseMatrix output;
  ForwardCache cache;
};

// Pure forward pass. Running BatchNorm statistics are not modified; call
// CommitBatchNormStats with the returned cache to fold batch statistics in.
ForwardResult MlpForward(const MlpParams& params, const DenseMatrix& input, Mode mode);

// Forward without building a cache (inference).
DenseMatrix MlpInfer(const MlpParams& params, const DenseMatrix& input);

void CommitBatchNormStats(MlpParams& params, const ForwardCache& cache);

struct MlpGrads {
  std::vector<DenseMatrix> weight;
  std::vector<Vector> bias;
  std::vector<Vector> bn_scale;  // empty vectors for layers without BN
  std::vector<Vector> bn_shift;
};

MlpGrads ZeroGrads(const MlpParams& params);
void AddInPlace(MlpGrads& into, const MlpGrads& other);

struct BackwardResult {
  MlpGrads grads;
  DenseMatrix input_grad;
};

BackwardResult MlpBackward(const MlpParams& params, const ForwardCache& cache,
                           const DenseMatrix& output_grad);

// Flat views over every trainable tensor, in a fixed order shared by
// ParamViews and GradViews.
std::vector<std::span<double>> ParamViews(MlpParams& params);
std::vector<std::span<double>> GradViews(MlpGrads& grads);
std::vector<std::string> ParamNames(const MlpParams& params);

// One power iteration for each spectral-normalized layer.
void RefreshSpectralNorms(MlpParams& params, int iterations = 1);

// Weights actually applied in the forward pass (W / sigma_hat or W).
DenseMatrix EffectiveWeight(const DenseLayer& layer);

}  // namespace plangan::nn
