#include "plangan/gan/ensemble.h"

#include <fstream>

#include "plangan/core/errors.h"

namespace plangan::gan {
namespace {

DenseMatrix StandardNormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  DenseMatrix z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.Normal();
  return z;
}

DenseMatrix StackRows(const std::vector<Vector>& rows) {
  DenseMatrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

nlohmann::json AdamJson(const nn::AdamOptions& o) {
  return {{"lr", o.learning_rate},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon},
          {"weight_decay", o.weight_decay}};
}

}  // namespace

void EnsembleConfig::Validate() const {
  if (members < 1) throw ConfigError("ensemble needs at least one GAN (M >= 1)");
  if (one_step_models < 0) throw ConfigError("K must be >= 0");
  if (tau < 1) throw ConfigError("tau must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (lambda > 0.0 && one_step_models == 0)
    throw ConfigError("lambda > 0 requires at least one one-step model");
  if (gan_batch < 2) throw ConfigError("B_g must be >= 2 (generator BatchNorm)");
  if (model_batch < 1) throw ConfigError("B_m must be >= 1");
  if (noise_dim < 1) throw ConfigError("noise dimension must be >= 1");
  if (critic_updates < 1) throw ConfigError("critic updates must be >= 1");
  if (hidden_sizes.empty()) throw ConfigError("networks need at least one hidden layer");
}

nlohmann::json EnsembleConfig::ToJson() const {
  return {{"M", members},
          {"K", one_step_models},
          {"tau", tau},
          {"lambda", lambda},
          {"B_g", gan_batch},
          {"B_m", model_batch},
          {"noise_dim", noise_dim},
          {"critic_updates", critic_updates},
          {"hidden_sizes", hidden_sizes},
          {"generator_adam", AdamJson(generator_adam)},
          {"discriminator_adam", AdamJson(discriminator_adam)},
          {"model_adam", AdamJson(model_adam)}};
}

// ---------------------------------------------------------------------------
// GanMember

GanMember::GanMember(const envs::GoalEnvSpec& spec, const EnsembleConfig& config,
                     std::uint64_t seed)
    : state_dim_(spec.state_dim),
      action_dim_(spec.action_dim),
      goal_dim_(spec.goal_dim),
      noise_dim_(config.noise_dim),
      action_scale_((spec.action_high - spec.action_low) / 2.0),
      action_offset_((spec.action_high + spec.action_low) / 2.0),
      rng_(DeriveSeed(seed, 0)) {
  Rng init(DeriveSeed(seed, 1));
  nn::MlpSpec gen;
  gen.input_size = state_dim_ + goal_dim_ + noise_dim_;
  gen.hidden_sizes = config.hidden_sizes;
  gen.output_size = action_dim_ + state_dim_;
  gen.batch_norm = true;
  generator_ = nn::MakeMlp(gen, init);

  nn::MlpSpec disc;
  disc.input_size = 2 * state_dim_ + goal_dim_ + action_dim_;
  disc.hidden_sizes = config.hidden_sizes;
  disc.output_size = 1;
  disc.spectral_norm = true;
  discriminator_ = nn::MakeMlp(disc, init);

  generator_adam_ = nn::MakeAdamState(generator_, config.generator_adam);
  discriminator_adam_ = nn::MakeAdamState(discriminator_, config.discriminator_adam);
}

GeneratedStep GanMember::Generate(const DenseMatrix& states, const DenseMatrix& goals,
                                  const DenseMatrix& noise) const {
  const DenseMatrix raw = nn::MlpInfer(generator_, nn::ConcatCols({&states, &goals, &noise}));
  GeneratedStep out;
  out.actions = raw.leftCols(action_dim_).array().tanh().matrix();
  out.actions = (out.actions.array().rowwise() * action_scale_.transpose().array()).matrix();
  out.actions.rowwise() += action_offset_.transpose();
  out.next_states = states + raw.rightCols(state_dim_);
  return out;
}

void GanMember::Save(nn::TensorArchive& archive, const std::string& prefix) const {
  nn::SaveMlp(archive, prefix + "/generator", generator_);
  nn::SaveMlp(archive, prefix + "/discriminator", discriminator_);
  nn::SaveAdam(archive, prefix + "/generator_adam", generator_adam_);
  nn::SaveAdam(archive, prefix + "/discriminator_adam", discriminator_adam_);
}

void GanMember::Load(const nn::TensorArchive& archive, const std::string& prefix) {
  nn::LoadMlp(archive, prefix + "/generator", generator_);
  nn::LoadMlp(archive, prefix + "/discriminator", discriminator_);
  nn::LoadAdam(archive, prefix + "/generator_adam", generator_adam_);
  nn::LoadAdam(archive, prefix + "/discriminator_adam", discriminator_adam_);
}

// ---------------------------------------------------------------------------
// OneStepModel

OneStepModel::OneStepModel(const envs::GoalEnvSpec& spec, const EnsembleConfig& config,
                           std::uint64_t seed)
    : state_dim_(spec.state_dim), action_dim_(spec.action_dim), rng_(DeriveSeed(seed, 0)) {
  Rng init(DeriveSeed(seed, 1));
  nn::MlpSpec s;
  s.input_size = state_dim_ + action_dim_;
  s.hidden_sizes = config.hidden_sizes;
  s.output_size = state_dim_;
  params_ = nn::MakeMlp(s, init);
  adam_ = nn::MakeAdamState(params_, config.model_adam);
}

DenseMatrix OneStepModel::PredictDelta(const DenseMatrix& states,
                                       const DenseMatrix& actions) const {
  return nn::MlpInfer(params_, nn::ConcatCols({&states, &actions}));
}

namespace {

struct ModelBatch {
  DenseMatrix inputs;
  DenseMatrix targets;
};

ModelBatch MakeModelBatch(const std::vector<replay::Transition>& batch) {
  if (batch.empty()) throw ConfigError("empty transition batch");
  std::vector<Vector> s, a, d;
  for (const auto& t : batch) {
    s.push_back(t.state);
    a.push_back(t.action);
    d.push_back(t.next_state - t.state);
  }
  const DenseMatrix sm = StackRows(s), am = StackRows(a);
  return {nn::ConcatCols({&sm, &am}), StackRows(d)};
}

}  // namespace

double OneStepModel::Mse(const std::vector<replay::Transition>& batch) const {
  const ModelBatch b = MakeModelBatch(batch);
  const DenseMatrix pred = nn::MlpInfer(params_, b.inputs);
  return (pred - b.targets).rowwise().squaredNorm().mean();
}

double OneStepModel::TrainStep(const std::vector<replay::Transition>& batch) {
  const ModelBatch b = MakeModelBatch(batch);
  auto fwd = nn::MlpForward(params_, b.inputs, nn::Mode::kTrain);
  const DenseMatrix residual = fwd.output - b.targets;
  const double n = static_cast<double>(residual.rows());
  const double mse = residual.rowwise().squaredNorm().mean();
  auto back = nn::MlpBackward(params_, fwd.cache, (2.0 / n) * residual);
  nn::AdamStep(params_, back.grads, adam_);
  return mse;
}

double OneStepModel::TrainStep(const replay::ReplayBuffer& buffer, int batch_size) {
  return TrainStep(buffer.SampleModelBatch(batch_size, rng_));
}

void OneStepModel::Save(nn::TensorArchive& archive, const std::string& prefix) const {
  nn::SaveMlp(archive, prefix + "/model", params_);
  nn::SaveAdam(archive, prefix + "/model_adam", adam_);
}

void OneStepModel::Load(const nn::TensorArchive& archive, const std::string& prefix) {
  nn::LoadMlp(archive, prefix + "/model", params_);
  nn::LoadAdam(archive, prefix + "/model_adam", adam_);
}

// ---------------------------------------------------------------------------
// Batches, rollouts, losses

RealBatch MakeRealBatch(const std::vector<replay::GanWindow>& windows) {
  if (windows.empty()) throw ConfigError("empty window batch");
  const std::size_t tau = windows.front().actions.size();
  RealBatch batch;
  for (std::size_t i = 0; i <= tau; ++i) {
    std::vector<Vector> s;
    for (const auto& w : windows) {
      if (w.actions.size() != tau) throw ConfigError("windows have different lengths");
      s.push_back(w.states[i]);
    }
    batch.states.push_back(StackRows(s));
  }
  for (std::size_t i = 0; i < tau; ++i) {
    std::vector<Vector> a, g;
    for (const auto& w : windows) {
      a.push_back(w.actions[i]);
      g.push_back(w.goals[i]);
    }
    batch.actions.push_back(StackRows(a));
    batch.goals.push_back(StackRows(g));
  }
  return batch;
}

GeneratorStepCache GeneratorStepForward(const GanMember& member, const DenseMatrix& states,
                                        const DenseMatrix& goals, const DenseMatrix& noise,
                                        nn::Mode mode, GeneratedStep& out) {
  if (states.cols() != member.state_dim() || goals.cols() != member.goal_dim() ||
      noise.cols() != member.noise_dim())
    throw ConfigError("generator input dimensions do not match the member");
  auto fwd = nn::MlpForward(member.generator(), nn::ConcatCols({&states, &goals, &noise}), mode);
  GeneratorStepCache cache;
  cache.squashed = fwd.output.leftCols(member.action_dim()).array().tanh().matrix();
  out.actions = cache.squashed.array().rowwise() * member.action_scale().transpose().array();
  out.actions.rowwise() += member.action_offset().transpose();
  out.next_states = states + fwd.output.rightCols(member.state_dim());
  if (!out.next_states.allFinite()) throw NumericError("generator produced non-finite state");
  cache.net = std::move(fwd.cache);
  return cache;
}

ImaginedBatch RolloutImagined(const GanMember& member, const DenseMatrix& initial_states,
                              const std::vector<DenseMatrix>& goals,
                              const std::vector<DenseMatrix>& noise, nn::Mode mode) {
  if (goals.empty()) throw ConfigError("rollout needs tau >= 1");
  if (noise.size() != goals.size()) throw ConfigError("rollout noise/goal length mismatch");
  ImaginedBatch fake;
  fake.mode = mode;
  fake.goals = goals;
  fake.noise = noise;
  fake.states.push_back(initial_states);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    GeneratedStep step;
    fake.caches.push_back(
        GeneratorStepForward(member, fake.states.back(), goals[i], noise[i], mode, step));
    fake.actions.push_back(std::move(step.actions));
    fake.states.push_back(std::move(step.next_states));
  }
  return fake;
}

ImaginedBatch RolloutImagined(const GanMember& member, const DenseMatrix& initial_states,
                              const std::vector<DenseMatrix>& goals, Rng& rng, nn::Mode mode) {
  std::vector<DenseMatrix> noise;
  for (std::size_t i = 0; i < goals.size(); ++i)
    noise.push_back(StandardNormal(initial_states.rows(), member.noise_dim(), rng));
  return RolloutImagined(member, initial_states, goals, noise, mode);
}

DenseMatrix CriticInputs(const std::vector<DenseMatrix>& states,
                         const std::vector<DenseMatrix>& goals,
                         const std::vector<DenseMatrix>& actions) {
  const std::size_t tau = actions.size();
  if (states.size() != tau + 1 || goals.size() != tau || tau == 0)
    throw ConfigError("critic inputs: inconsistent window lengths");
  const Eigen::Index b = states.front().rows();
  const Eigen::Index sd = states.front().cols(), gd = goals.front().cols(),
                     ad = actions.front().cols();
  DenseMatrix x(static_cast<Eigen::Index>(tau) * b, 2 * sd + gd + ad);
  for (std::size_t i = 0; i < tau; ++i) {
    auto rows = x.middleRows(static_cast<Eigen::Index>(i) * b, b);
    rows.leftCols(sd) = states[i];
    rows.middleCols(sd, gd) = goals[i];
    rows.middleCols(sd + gd, sd) = states[i + 1];
    rows.rightCols(ad) = actions[i];
  }
  return x;
}

namespace {

void CheckPaired(const RealBatch& real, const ImaginedBatch& fake) {
  if (real.actions.size() != fake.actions.size() || real.states.size() != fake.states.size())
    throw ConfigError("real and imagined windows differ in length");
  if (real.states.front().rows() != fake.states.front().rows() ||
      real.states.front().cols() != fake.states.front().cols())
    throw ConfigError("real and imagined batches differ in shape");
}

}  // namespace

double DiscriminatorLoss(const nn::MlpParams& discriminator, const RealBatch& real,
                         const ImaginedBatch& fake) {
  CheckPaired(real, fake);
  const DenseMatrix dr = nn::MlpInfer(discriminator, CriticInputs(real.states, real.goals, real.actions));
  const DenseMatrix df = nn::MlpInfer(discriminator, CriticInputs(fake.states, fake.goals, fake.actions));
  return dr.mean() - df.mean();
}

DiscriminatorGrad DiscriminatorLossAndGrad(const nn::MlpParams& discriminator,
                                           const RealBatch& real, const ImaginedBatch& fake) {
  CheckPaired(real, fake);
  const DenseMatrix xr = CriticInputs(real.states, real.goals, real.actions);
  const DenseMatrix xf = CriticInputs(fake.states, fake.goals, fake.actions);
  DenseMatrix x(xr.rows() + xf.rows(), xr.cols());
  x.topRows(xr.rows()) = xr;
  x.bottomRows(xf.rows()) = xf;
  auto fwd = nn::MlpForward(discriminator, x, nn::Mode::kTrain);
  const double nr = static_cast<double>(xr.rows()), nf = static_cast<double>(xf.rows());
  DiscriminatorGrad out;
  out.loss = fwd.output.topRows(xr.rows()).mean() - fwd.output.bottomRows(xf.rows()).mean();
  DenseMatrix g(x.rows(), 1);
  g.topRows(xr.rows()).setConstant(1.0 / nr);
  g.bottomRows(xf.rows()).setConstant(-1.0 / nf);
  out.grads = nn::MlpBackward(discriminator, fwd.cache, g).grads;
  return out;
}

namespace {

// Penalty pieces for one offset i. Returns (1/K) sum_j ||r_j||^2 per row and,
// when requested, d/d(s), d/d(s'), d/d(a) of the sum over rows scaled by `scale`.
struct PenaltyPart {
  Vector per_row;
  DenseMatrix d_state, d_next, d_action;
};

PenaltyPart Penalty(const std::vector<OneStepModel>& models, const DenseMatrix& s,
                    const DenseMatrix& next, const DenseMatrix& a, bool with_grad,
                    double scale) {
  PenaltyPart p;
  p.per_row = Vector::Zero(s.rows());
  const double k = static_cast<double>(models.size());
  if (with_grad) {
    p.d_state = DenseMatrix::Zero(s.rows(), s.cols());
    p.d_next = DenseMatrix::Zero(s.rows(), s.cols());
    p.d_action = DenseMatrix::Zero(a.rows(), a.cols());
  }
  const DenseMatrix delta = next - s;
  const DenseMatrix input = nn::ConcatCols({&s, &a});
  for (const auto& model : models) {
    if (!with_grad) {
      const DenseMatrix r = delta - nn::MlpInfer(model.params(), input);
      p.per_row += r.rowwise().squaredNorm() / k;
      continue;
    }
    auto fwd = nn::MlpForward(model.params(), input, nn::Mode::kEval);
    const DenseMatrix r = delta - fwd.output;
    p.per_row += r.rowwise().squaredNorm() / k;
    const double c = 2.0 * scale / k;
    p.d_next += c * r;
    p.d_state -= c * r;
    // d/d(input) of -f(input) . r
    const DenseMatrix jr = nn::MlpBackward(model.params(), fwd.cache, r).input_grad;
    p.d_state -= c * jr.leftCols(s.cols());
    p.d_action -= c * jr.rightCols(a.cols());
  }
  return p;
}

}  // namespace

GeneratorLossTerms GeneratorLoss(const nn::MlpParams& discriminator, const ImaginedBatch& fake,
                                 const std::vector<OneStepModel>& models, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  GeneratorLossTerms terms;
  terms.critic =
      nn::MlpInfer(discriminator, CriticInputs(fake.states, fake.goals, fake.actions)).mean();
  if (!models.empty()) {
    double sum = 0.0;
    double count = 0.0;
    for (int i = 0; i < fake.tau(); ++i) {
      const auto p = Penalty(models, fake.states[i], fake.states[i + 1], fake.actions[i], false, 0.0);
      sum += p.per_row.sum();
      count += static_cast<double>(p.per_row.size());
    }
    terms.penalty = sum / count;
  } else if (lambda > 0.0) {
    throw ConfigError("lambda > 0 requires one-step models");
  }
  terms.total = terms.critic + lambda * terms.penalty;
  return terms;
}

GeneratorGrad GeneratorLossAndGrad(const GanMember& member, const ImaginedBatch& fake,
                                   const std::vector<OneStepModel>& models, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (lambda > 0.0 && models.empty()) throw ConfigError("lambda > 0 requires one-step models");
  const int tau = fake.tau();
  if (static_cast<int>(fake.caches.size()) != tau)
    throw ConfigError("imagined batch has no generator caches");
  const Eigen::Index b = fake.states.front().rows();
  const int sd = member.state_dim(), gd = member.goal_dim(), ad = member.action_dim();
  const double n = static_cast<double>(tau) * static_cast<double>(b);

  GeneratorGrad out;
  // Critic term.
  const DenseMatrix x = CriticInputs(fake.states, fake.goals, fake.actions);
  auto dfwd = nn::MlpForward(member.discriminator(), x, nn::Mode::kTrain);
  out.loss.critic = dfwd.output.mean();
  const DenseMatrix dx =
      nn::MlpBackward(member.discriminator(), dfwd.cache, DenseMatrix::Constant(x.rows(), 1, 1.0 / n))
          .input_grad;

  std::vector<DenseMatrix> d_states(tau + 1, DenseMatrix::Zero(b, sd));
  std::vector<DenseMatrix> d_actions(tau, DenseMatrix::Zero(b, ad));
  for (int i = 0; i < tau; ++i) {
    const auto rows = dx.middleRows(static_cast<Eigen::Index>(i) * b, b);
    d_states[i] += rows.leftCols(sd);
    d_states[i + 1] += rows.middleCols(sd + gd, sd);
    d_actions[i] += rows.rightCols(ad);
  }

  // One-step consistency term.
  if (!models.empty()) {
    double sum = 0.0;
    for (int i = 0; i < tau; ++i) {
      const bool grad = lambda > 0.0;
      auto p = Penalty(models, fake.states[i], fake.states[i + 1], fake.actions[i], grad, lambda / n);
      sum += p.per_row.sum();
      if (grad) {
        d_states[i] += p.d_state;
        d_states[i + 1] += p.d_next;
        d_actions[i] += p.d_action;
      }
    }
    out.loss.penalty = sum / n;
  }
  out.loss.total = out.loss.critic + lambda * out.loss.penalty;

  // Backprop through the chain, last step first.
  out.grads = nn::ZeroGrads(member.generator());
  for (int i = tau - 1; i >= 0; --i) {
    const GeneratorStepCache& c = fake.caches[i];
    DenseMatrix d_raw(b, ad + sd);
    d_raw.leftCols(ad) = (d_actions[i].array().rowwise() * member.action_scale().transpose().array() *
                          (1.0 - c.squashed.array().square()))
                             .matrix();
    d_raw.rightCols(sd) = d_states[i + 1];
    auto back = nn::MlpBackward(member.generator(), c.net, d_raw);
    nn::AddInPlace(out.grads, back.grads);
    if (i > 0) d_states[i] += d_states[i + 1] + back.input_grad.leftCols(sd);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GanEnsemble

GanEnsemble::GanEnsemble(const envs::GoalEnvSpec& spec, EnsembleConfig config,
                         std::uint64_t seed)
    : spec_(spec), config_(std::move(config)) {
  config_.Validate();
  for (int m = 0; m < config_.members; ++m)
    members_.emplace_back(spec_, config_, DeriveSeed(seed, 1, m));
  for (int k = 0; k < config_.one_step_models; ++k)
    models_.emplace_back(spec_, config_, DeriveSeed(seed, 2, k));
}

GeneratedStep GanEnsemble::Generate(int member, const DenseMatrix& states,
                                    const DenseMatrix& goals, const DenseMatrix& noise) const {
  if (member < 0 || member >= member_count()) throw ConfigError("member index out of range");
  return members_[static_cast<std::size_t>(member)].Generate(states, goals, noise);
}

TrainMetrics GanEnsemble::TrainMember(int m, const replay::ReplayBuffer& buffer) {
  GanMember& member = members_.at(static_cast<std::size_t>(m));
  TrainMetrics metrics;
  ImaginedBatch fake;
  for (int c = 0; c < config_.critic_updates; ++c) {
    const auto windows = buffer.SampleGanBatch(config_.gan_batch, config_.tau, member.rng());
    const RealBatch real = MakeRealBatch(windows);
    fake = RolloutImagined(member, real.states.front(), real.goals, member.rng(), nn::Mode::kTrain);
    for (const auto& cache : fake.caches) nn::CommitBatchNormStats(member.generator(), cache.net);

    nn::RefreshSpectralNorms(member.discriminator(), 1);
    auto d = DiscriminatorLossAndGrad(member.discriminator(), real, fake);
    nn::AdamStep(member.discriminator(), d.grads, member.discriminator_adam());
    metrics.critic_loss = d.loss;
  }
  auto g = GeneratorLossAndGrad(member, fake, models_, config_.lambda);
  nn::AdamStep(member.generator(), g.grads, member.generator_adam());
  metrics.generator_loss = g.loss.total;
  metrics.penalty = g.loss.penalty;
  return metrics;
}

double GanEnsemble::TrainOneStepModel(int k, const replay::ReplayBuffer& buffer) {
  return models_.at(static_cast<std::size_t>(k)).TrainStep(buffer, config_.model_batch);
}

TrainMetrics GanEnsemble::TrainStep(const replay::ReplayBuffer& buffer) {
  if (buffer.empty()) throw UnavailableError("cannot train on an empty replay buffer");
  TrainMetrics total;
  for (int m = 0; m < member_count(); ++m) {
    const TrainMetrics mm = TrainMember(m, buffer);
    total.critic_loss += mm.critic_loss / member_count();
    total.generator_loss += mm.generator_loss / member_count();
    total.penalty += mm.penalty / member_count();
  }
  for (int k = 0; k < static_cast<int>(models_.size()); ++k)
    total.one_step_mse += TrainOneStepModel(k, buffer) / static_cast<double>(models_.size());
  ++train_steps_;
  return total;
}

void GanEnsemble::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["spec"] = {{"id", spec_.id},
                      {"state_dim", spec_.state_dim},
                      {"action_dim", spec_.action_dim},
                      {"goal_dim", spec_.goal_dim}};
  manifest["config"] = config_.ToJson();
  manifest["train_steps"] = train_steps_;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    nn::TensorArchive archive;
    members_[m].Save(archive, "member" + std::to_string(m));
    const std::string file = "member_" + std::to_string(m) + ".pgan";
    archive.Save(dir / file);
    manifest["members"].push_back(
        {{"id", m}, {"file", file}, {"rng", members_[m].rng().Serialize()}});
  }
  for (std::size_t k = 0; k < models_.size(); ++k) {
    nn::TensorArchive archive;
    models_[k].Save(archive, "one_step" + std::to_string(k));
    const std::string file = "one_step_" + std::to_string(k) + ".pgan";
    archive.Save(dir / file);
    manifest["one_step_models"].push_back(
        {{"id", k}, {"file", file}, {"rng", models_[k].rng().Serialize()}});
  }
  std::ofstream out(dir / "ensemble.json");
  if (!out) throw IoError("cannot write " + (dir / "ensemble.json").string());
  out << manifest.dump(2) << '\n';
}

void GanEnsemble::Load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "ensemble.json");
  if (!in) throw IoError("cannot read " + (dir / "ensemble.json").string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    if (manifest.at("config") != config_.ToJson())
      throw LoadError("ensemble.json", "ensemble configuration differs from checkpoint");
    const auto& members = manifest.at("members");
    if (members.size() != members_.size())
      throw LoadError("ensemble.json", "member count differs from checkpoint");
    for (std::size_t m = 0; m < members_.size(); ++m) {
      const auto archive = nn::TensorArchive::Load(dir / members[m].at("file").get<std::string>());
      members_[m].Load(archive, "member" + std::to_string(m));
      members_[m].rng() = Rng::Deserialize(members[m].at("rng").get<std::string>());
    }
    const auto models = manifest.value("one_step_models", nlohmann::json::array());
    if (models.size() != models_.size())
      throw LoadError("ensemble.json", "one-step model count differs from checkpoint");
    for (std::size_t k = 0; k < models_.size(); ++k) {
      const auto archive = nn::TensorArchive::Load(dir / models[k].at("file").get<std::string>());
      models_[k].Load(archive, "one_step" + std::to_string(k));
      models_[k].rng() = Rng::Deserialize(models[k].at("rng").get<std::string>());
    }
    train_steps_ = manifest.at("train_steps").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("ensemble.json", e.what());
  }
}

}  // namespace plangan::gan
