#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plangan/core/rng.h"
#include "plangan/envs/goal_env.h"
#include "plangan/nn/adam.h"
#include "plangan/nn/checkpoint.h"
#include "plangan/nn/mlp.h"
#include "plangan/replay/replay_buffer.h"

namespace plangan::gan {

using nn::DenseMatrix;
using nn::Vector;

struct EnsembleConfig {
  int members = 3;          // M
  int one_step_models = 3;  // K
  int tau = 5;
  double lambda = 30.0;
  int gan_batch = 128;    // B_g
  int model_batch = 256;  // B_m
  int noise_dim = 16;
  int critic_updates = 1;
  std::vector<int> hidden_sizes = {512, 512};
  nn::AdamOptions generator_adam{1e-4, 0.5, 0.999, 1e-8, 1e-4};
  nn::AdamOptions discriminator_adam{1e-4, 0.5, 0.999, 1e-8, 1e-4};
  nn::AdamOptions model_adam{1e-3, 0.9, 0.999, 1e-8, 0.0};

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct GeneratedStep {
  DenseMatrix actions;
  DenseMatrix next_states;
};

// What the planner needs from a model of the environment: a set of
// stochastic generators mapping (state, goal, noise) to (action, next state).
class TrajectoryGenerator {
 public:
  virtual ~TrajectoryGenerator() = default;
  virtual int member_count() const = 0;
  virtual int noise_dim() const = 0;
  virtual int action_dim() const = 0;
  // Batched, one sample per row. Must be a pure function of its inputs.
  virtual GeneratedStep Generate(int member, const DenseMatrix& states, const DenseMatrix& goals,
                                 const DenseMatrix& noise) const = 0;
};

// Generator G: (s, g, z) -> (a, s'), with a tanh head scaled to the action
// box and s' = s + delta. Discriminator D: (s, g, s', a) -> scalar critic,
// spectrally normalized on every layer.
class GanMember {
 public:
  GanMember(const envs::GoalEnvSpec& spec, const EnsembleConfig& config, std::uint64_t seed);

  // Eval-mode (running BatchNorm statistics) generation.
  GeneratedStep Generate(const DenseMatrix& states, const DenseMatrix& goals,
                         const DenseMatrix& noise) const;

  nn::MlpParams& generator() { return generator_; }
  const nn::MlpParams& generator() const { return generator_; }
  nn::MlpParams& discriminator() { return discriminator_; }
  const nn::MlpParams& discriminator() const { return discriminator_; }
  nn::AdamState& generator_adam() { return generator_adam_; }
  nn::AdamState& discriminator_adam() { return discriminator_adam_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int goal_dim() const { return goal_dim_; }
  int noise_dim() const { return noise_dim_; }
  const Vector& action_scale() const { return action_scale_; }
  const Vector& action_offset() const { return action_offset_; }

  void Save(nn::TensorArchive& archive, const std::string& prefix) const;
  void Load(const nn::TensorArchive& archive, const std::string& prefix);

 private:
  int state_dim_, action_dim_, goal_dim_, noise_dim_;
  Vector action_scale_, action_offset_;
  nn::MlpParams generator_;
  nn::MlpParams discriminator_;
  nn::AdamState generator_adam_;
  nn::AdamState discriminator_adam_;
  Rng rng_;
};

// Deterministic f(s, a) -> s' - s.
class OneStepModel {
 public:
  OneStepModel(const envs::GoalEnvSpec& spec, const EnsembleConfig& config, std::uint64_t seed);

  DenseMatrix PredictDelta(const DenseMatrix& states, const DenseMatrix& actions) const;
  // Mean over the batch of ||f(s, a) - (s' - s)||^2.
  double Mse(const std::vector<replay::Transition>& batch) const;
  // One Adam step on the batch; returns the pre-update MSE.
  double TrainStep(const std::vector<replay::Transition>& batch);
  // Samples B_m transitions from the model's own stream, then TrainStep.
  double TrainStep(const replay::ReplayBuffer& buffer, int batch_size);

  nn::MlpParams& params() { return params_; }
  const nn::MlpParams& params() const { return params_; }
  nn::AdamState& adam() { return adam_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  void Save(nn::TensorArchive& archive, const std::string& prefix) const;
  void Load(const nn::TensorArchive& archive, const std::string& prefix);

 private:
  int state_dim_, action_dim_;
  nn::MlpParams params_;
  nn::AdamState adam_;
  Rng rng_;
};

// Real windows laid out per offset: states[i] is B x state_dim, etc.
struct RealBatch {
  std::vector<DenseMatrix> states;   // tau + 1
  std::vector<DenseMatrix> actions;  // tau
  std::vector<DenseMatrix> goals;    // tau
};

RealBatch MakeRealBatch(const std::vector<replay::GanWindow>& windows);

struct GeneratorStepCache {
  nn::ForwardCache net;
  DenseMatrix squashed;  // tanh of the raw action head
};

// Imagined counterpart of a RealBatch: states[0] is the real s_0, goals are
// the real window's goals, and each later state comes from the generator fed
// its own previous output.
struct ImaginedBatch {
  std::vector<DenseMatrix> states;   // tau + 1
  std::vector<DenseMatrix> actions;  // tau
  std::vector<DenseMatrix> goals;    // tau
  std::vector<DenseMatrix> noise;    // tau
  std::vector<GeneratorStepCache> caches;
  nn::Mode mode = nn::Mode::kTrain;

  int tau() const { return static_cast<int>(actions.size()); }
};

// One generator call with a cache for backprop.
GeneratorStepCache GeneratorStepForward(const GanMember& member, const DenseMatrix& states,
                                        const DenseMatrix& goals, const DenseMatrix& noise,
                                        nn::Mode mode, GeneratedStep& out);

ImaginedBatch RolloutImagined(const GanMember& member, const DenseMatrix& initial_states,
                              const std::vector<DenseMatrix>& goals,
                              const std::vector<DenseMatrix>& noise, nn::Mode mode);
// Draws fresh standard-normal noise for every step from `rng`.
ImaginedBatch RolloutImagined(const GanMember& member, const DenseMatrix& initial_states,
                              const std::vector<DenseMatrix>& goals, Rng& rng, nn::Mode mode);

// [s, g, s', a] rows for every transition, stacked offset-major.
DenseMatrix CriticInputs(const std::vector<DenseMatrix>& states,
                         const std::vector<DenseMatrix>& goals,
                         const std::vector<DenseMatrix>& actions);

// E_real[D] - E_fake[D] over all transitions of all windows. The critic is
// trained to minimize this.
double DiscriminatorLoss(const nn::MlpParams& discriminator, const RealBatch& real,
                         const ImaginedBatch& fake);

struct DiscriminatorGrad {
  double loss = 0.0;
  nn::MlpGrads grads;
};
DiscriminatorGrad DiscriminatorLossAndGrad(const nn::MlpParams& discriminator,
                                           const RealBatch& real, const ImaginedBatch& fake);

struct GeneratorLossTerms {
  double total = 0.0;
  double critic = 0.0;   // E_fake[D]
  double penalty = 0.0;  // E[(1/K) sum_j ||(s' - s) - f_j(s, a)||^2], before lambda
};

// E_fake[D(s, g, s', a) + lambda (1/K) sum_j ||(s' - s) - f_j(s, a)||^2].
// Throws ConfigError when lambda < 0.
GeneratorLossTerms GeneratorLoss(const nn::MlpParams& discriminator, const ImaginedBatch& fake,
                                 const std::vector<OneStepModel>& models, double lambda);

struct GeneratorGrad {
  GeneratorLossTerms loss;
  nn::MlpGrads grads;
};
// Gradient of GeneratorLoss with respect to the generator parameters through
// the whole autoregressive chain. `fake` must carry caches from
// RolloutImagined. One-step models and the critic receive no gradient.
GeneratorGrad GeneratorLossAndGrad(const GanMember& member, const ImaginedBatch& fake,
                                   const std::vector<OneStepModel>& models, double lambda);

struct TrainMetrics {
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  double penalty = 0.0;
  double one_step_mse = 0.0;
};

// M GanMembers plus K OneStepModels, each with its own initialization and its
// own sampling stream.
class GanEnsemble final : public TrajectoryGenerator {
 public:
  GanEnsemble(const envs::GoalEnvSpec& spec, EnsembleConfig config, std::uint64_t seed);

  // Algorithm step: every member's critic and generator update, then every
  // one-step model's update. Returns means across members / models.
  TrainMetrics TrainStep(const replay::ReplayBuffer& buffer);
  // Critic then generator update for member m only.
  TrainMetrics TrainMember(int m, const replay::ReplayBuffer& buffer);
  double TrainOneStepModel(int k, const replay::ReplayBuffer& buffer);

  int member_count() const override { return static_cast<int>(members_.size()); }
  int noise_dim() const override { return config_.noise_dim; }
  int action_dim() const override { return spec_.action_dim; }
  GeneratedStep Generate(int member, const DenseMatrix& states, const DenseMatrix& goals,
                         const DenseMatrix& noise) const override;

  const EnsembleConfig& config() const { return config_; }
  const envs::GoalEnvSpec& spec() const { return spec_; }
  std::vector<GanMember>& members() { return members_; }
  const std::vector<GanMember>& members() const { return members_; }
  std::vector<OneStepModel>& models() { return models_; }
  const std::vector<OneStepModel>& models() const { return models_; }
  std::int64_t train_steps() const { return train_steps_; }

  // member_<i>.pgan, one_step_<k>.pgan and ensemble.json in `dir`.
  void Save(const std::filesystem::path& dir) const;
  // Loads into an ensemble constructed with the same spec and config.
  void Load(const std::filesystem::path& dir);

 private:
  envs::GoalEnvSpec spec_;
  EnsembleConfig config_;
  std::vector<GanMember> members_;
  std::vector<OneStepModel> models_;
  std::int64_t train_steps_ = 0;
};

}  // namespace plangan::gan
