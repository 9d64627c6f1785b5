#include "plangan/planner/planner.h"

#include <algorithm>
#include <cmath>

#include "plangan/core/errors.h"

namespace plangan::planner {

std::string ToString(SelectionMode mode) {
  return mode == SelectionMode::kMax ? "max" : "softmax";
}

std::string ToString(Variant variant) {
  switch (variant) {
    case Variant::kFull:
      return "full";
    case Variant::kNoPlanner:
      return "no-planner";
    case Variant::kNoPlannerAvg:
      return "no-planner-avg";
  }
  return "full";
}

SelectionMode ParseSelectionMode(const std::string& text) {
  if (text == "max") return SelectionMode::kMax;
  if (text == "softmax") return SelectionMode::kSoftmax;
  throw ConfigError("unknown selection mode '" + text + "' (expected max or softmax)");
}

Variant ParseVariant(const std::string& text) {
  if (text == "full") return Variant::kFull;
  if (text == "no-planner") return Variant::kNoPlanner;
  if (text == "no-planner-avg") return Variant::kNoPlannerAvg;
  throw ConfigError("unknown planner variant '" + text + "'");
}

void PlannerConfig::Validate() const {
  if (proposals < 1) throw ConfigError("Q must be >= 1");
  if (copies < 1) throw ConfigError("C must be >= 1");
  if (horizon < 1) throw ConfigError("planning horizon must be >= 1");
  if (mode == SelectionMode::kSoftmax && !(alpha > 0.0))
    throw ConfigError("alpha must be > 0 in softmax mode");
}

namespace {

void CheckGenerator(const gan::TrajectoryGenerator& generator) {
  if (generator.member_count() < 1) throw ConfigError("planner needs at least one generator");
}

// Draws a member index then a noise row from `rng`.
int DrawMember(Rng& rng, int members, Eigen::Ref<nn::RowVector> noise) {
  const int m = static_cast<int>(rng.Index(0, members - 1));
  for (Eigen::Index k = 0; k < noise.size(); ++k) noise[k] = rng.Normal();
  return m;
}

// Evaluates one generation step for every row, routing row r to
// member[r]. Rows are grouped per member so each member runs one batch.
gan::GeneratedStep GenerateRouted(const gan::TrajectoryGenerator& generator,
                                  const std::vector<int>& member, const DenseMatrix& states,
                                  const DenseMatrix& goals, const DenseMatrix& noise,
                                  int action_dim) {
  const Eigen::Index rows = states.rows();
  gan::GeneratedStep out;
  out.actions.resize(rows, action_dim);
  out.next_states.resize(rows, states.cols());
  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(generator.member_count()));
  for (Eigen::Index r = 0; r < rows; ++r) groups[static_cast<std::size_t>(member[r])].push_back(r);
  for (int m = 0; m < generator.member_count(); ++m) {
    const auto& idx = groups[static_cast<std::size_t>(m)];
    if (idx.empty()) continue;
    const auto n = static_cast<Eigen::Index>(idx.size());
    DenseMatrix s(n, states.cols()), g(n, goals.cols()), z(n, noise.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      s.row(i) = states.row(idx[i]);
      g.row(i) = goals.row(idx[i]);
      z.row(i) = noise.row(idx[i]);
    }
    const gan::GeneratedStep step = generator.Generate(m, s, g, z);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.actions.row(idx[i]) = step.actions.row(i);
      out.next_states.row(idx[i]) = step.next_states.row(i);
    }
  }
  return out;
}

struct RolloutResult {
  std::vector<int> achieved_count;  // per rollout, including the start state
  std::vector<DenseMatrix> sequences;
  std::vector<std::int64_t> member_counts;
};

// Rolls every start row forward `horizon` steps. Rollout r uses streams[r]
// for both its member choices and noise.
RolloutResult RunRollouts(const gan::TrajectoryGenerator& generator, const envs::GoalEnv* env,
                          const DenseMatrix& starts, const Vector& goal, int horizon,
                          std::vector<Rng>& streams, bool record) {
  const Eigen::Index rows = starts.rows();
  const int members = generator.member_count();
  RolloutResult result;
  result.member_counts.assign(static_cast<std::size_t>(members), 0);
  result.achieved_count.assign(static_cast<std::size_t>(rows), 0);
  if (record) result.sequences.assign(static_cast<std::size_t>(rows),
                                      DenseMatrix(horizon + 1, starts.cols()));
  const DenseMatrix goals = goal.transpose().replicate(rows, 1);
  const auto tally = [&](const DenseMatrix& states, int t) {
    if (record)
      for (Eigen::Index r = 0; r < rows; ++r) result.sequences[r].row(t) = states.row(r);
    if (env) {
      const DenseMatrix achieved = env->AchievedGoals(states);
      const double eps2 = env->spec().epsilon * env->spec().epsilon;
      for (Eigen::Index r = 0; r < rows; ++r)
        if ((achieved.row(r) - goal.transpose()).squaredNorm() <= eps2)
          ++result.achieved_count[r];
    }
  };

  DenseMatrix states = starts;
  tally(states, 0);
  DenseMatrix noise(rows, generator.noise_dim());
  std::vector<int> member(static_cast<std::size_t>(rows));
  const int action_dim = generator.action_dim();
  for (int t = 1; t <= horizon; ++t) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      member[r] = DrawMember(streams[r], members, noise.row(r));
      ++result.member_counts[member[r]];
    }
    states = GenerateRouted(generator, member, states, goals, noise, action_dim).next_states;
    tally(states, t);
  }
  return result;
}

}  // namespace

std::vector<Proposal> ProposeInitial(const gan::TrajectoryGenerator& generator,
                                     const Vector& state, const Vector& goal, int count,
                                     std::uint64_t seed) {
  CheckGenerator(generator);
  if (count < 1) throw ConfigError("Q must be >= 1");
  const Eigen::Index q = count;
  DenseMatrix noise(q, generator.noise_dim());
  std::vector<int> member(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < q; ++i) {
    Rng rng(DeriveSeed(seed, 0, i));
    member[i] = DrawMember(rng, generator.member_count(), noise.row(i));
  }
  const DenseMatrix states = state.transpose().replicate(q, 1);
  const DenseMatrix goals = goal.transpose().replicate(q, 1);
  const int action_dim = generator.action_dim();
  const auto step = GenerateRouted(generator, member, states, goals, noise, action_dim);
  std::vector<Proposal> proposals(static_cast<std::size_t>(q));
  for (Eigen::Index i = 0; i < q; ++i) {
    proposals[i].action = step.actions.row(i).transpose();
    proposals[i].next_state = step.next_states.row(i).transpose();
    proposals[i].member = member[i];
  }
  return proposals;
}

Futures SimulateFutures(const gan::TrajectoryGenerator& generator, const Proposal& proposal,
                        const Vector& goal, int copies, int horizon, std::uint64_t seed) {
  CheckGenerator(generator);
  if (copies < 1) throw ConfigError("C must be >= 1");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  std::vector<Rng> streams;
  for (int c = 0; c < copies; ++c) streams.emplace_back(DeriveSeed(seed, c));
  const DenseMatrix starts = proposal.next_state.transpose().replicate(copies, 1);
  auto run = RunRollouts(generator, nullptr, starts, goal, horizon, streams, true);
  return {std::move(run.sequences), std::move(run.member_counts)};
}

double ScoreRollout(const envs::GoalEnv& env, const DenseMatrix& states, const Vector& goal) {
  if (states.rows() == 0) throw ConfigError("cannot score an empty rollout");
  const DenseMatrix achieved = env.AchievedGoals(states);
  int hits = 0;
  for (Eigen::Index r = 0; r < achieved.rows(); ++r)
    if (env.Achieves(achieved.row(r).transpose(), goal)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(states.rows());
}

std::optional<std::vector<double>> NormalizeScores(const std::vector<double>& raw) {
  if (raw.empty()) throw ConfigError("no scores to normalize");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (*hi == *lo) return std::nullopt;
  std::vector<double> n(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) n[i] = (raw[i] - *lo) / (*hi - *lo);
  return n;
}

Vector SelectAction(std::vector<ScoredProposal>& proposals, SelectionMode mode, double alpha) {
  if (proposals.empty()) throw ConfigError("cannot select from an empty proposal list");
  std::vector<double> raw;
  for (const auto& p : proposals) raw.push_back(p.raw_score);
  const auto normalized = NormalizeScores(raw);
  for (std::size_t i = 0; i < proposals.size(); ++i)
    proposals[i].normalized_score = normalized ? (*normalized)[i] : 0.0;

  if (mode == SelectionMode::kMax) {
    if (!normalized) return proposals.front().action;
    std::size_t best = 0;
    for (std::size_t i = 1; i < proposals.size(); ++i)
      if (proposals[i].normalized_score > proposals[best].normalized_score) best = i;
    return proposals[best].action;
  }

  Vector weighted = Vector::Zero(proposals.front().action.size());
  if (!normalized) {
    for (const auto& p : proposals) weighted += p.action;
    return weighted / static_cast<double>(proposals.size());
  }
  // Shift by the maximum normalized score (1) so large alpha cannot overflow.
  double total = 0.0;
  for (const auto& p : proposals) {
    const double w = std::exp(alpha * (p.normalized_score - 1.0));
    weighted += w * p.action;
    total += w;
  }
  return weighted / total;
}

PlanDecision PlanStep(const envs::GoalEnv& env, const gan::TrajectoryGenerator& generator,
                      const Vector& state, const Vector& goal, const PlannerConfig& config,
                      std::uint64_t seed) {
  config.Validate();
  CheckGenerator(generator);
  PlanDecision decision;
  decision.member_counts.assign(static_cast<std::size_t>(generator.member_count()), 0);

  const int q_count = config.variant == Variant::kNoPlanner ? 1 : config.proposals;
  const auto proposals = ProposeInitial(generator, state, goal, q_count, DeriveSeed(seed, 0));
  for (const auto& p : proposals) {
    ++decision.member_counts[p.member];
    decision.proposals.push_back({p.action, p.next_state, 0.0, 0.0});
  }

  if (config.variant == Variant::kNoPlanner) {
    decision.action = proposals.front().action;
    return decision;
  }
  if (config.variant == Variant::kNoPlannerAvg) {
    Vector mean = Vector::Zero(proposals.front().action.size());
    for (const auto& p : proposals) mean += p.action;
    decision.action = mean / static_cast<double>(proposals.size());
    return decision;
  }

  // All Q x C rollouts in one batch; rollout (q, c) uses the same stream as
  // SimulateFutures(proposal q, seed = DeriveSeed(seed, 1, q)) copy c.
  const int copies = config.copies;
  const Eigen::Index rows = static_cast<Eigen::Index>(q_count) * copies;
  DenseMatrix starts(rows, state.size());
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(rows));
  for (int q = 0; q < q_count; ++q) {
    const std::uint64_t qseed = DeriveSeed(DeriveSeed(seed, 1), q);
    for (int c = 0; c < copies; ++c) {
      starts.row(static_cast<Eigen::Index>(q) * copies + c) = proposals[q].next_state.transpose();
      streams.emplace_back(DeriveSeed(qseed, c));
    }
  }
  const auto run = RunRollouts(generator, &env, starts, goal, config.horizon, streams, false);
  for (int m = 0; m < generator.member_count(); ++m) decision.member_counts[m] += run.member_counts[m];

  const double evaluated = static_cast<double>(config.horizon + 1);
  for (int q = 0; q < q_count; ++q) {
    double sum = 0.0;
    for (int c = 0; c < copies; ++c)
      sum += run.achieved_count[static_cast<std::size_t>(q * copies + c)] / evaluated;
    decision.proposals[q].raw_score = sum / copies;
  }
  decision.action = SelectAction(decision.proposals, config.mode, config.alpha);
  return decision;
}

replay::Trajectory PlanEpisode(const envs::GoalEnv& env,
                               const gan::TrajectoryGenerator& generator, const Vector& goal,
                               const PlannerConfig& config, Rng& rng,
                               const DiagnosticsSink& diagnostics) {
  config.Validate();
  CheckGenerator(generator);
  if (goal.size() != env.spec().goal_dim) throw ConfigError("goal dimension mismatch");
  replay::Trajectory traj;
  traj.desired_goal = goal;
  envs::Observation obs = env.Reset(rng);
  traj.states.push_back(obs.state);
  traj.achieved_goals.push_back(obs.achieved_goal);
  for (int t = 0; t < env.spec().episode_length; ++t) {
    const std::uint64_t step_seed = rng.NextSeed();
    PlanDecision decision = PlanStep(env, generator, obs.state, goal, config, step_seed);
    const Vector action = env.ClipAction(decision.action);
    obs = env.Step(obs.state, action);
    traj.actions.push_back(action);
    traj.states.push_back(obs.state);
    traj.achieved_goals.push_back(obs.achieved_goal);
    if (diagnostics) {
      std::vector<double> raw, norm;
      for (const auto& p : decision.proposals) {
        raw.push_back(p.raw_score);
        norm.push_back(p.normalized_score);
      }
      diagnostics({{"step", t},
                   {"raw_scores", raw},
                   {"normalized_scores", norm},
                   {"action", std::vector<double>(action.data(), action.data() + action.size())},
                   {"member_counts", decision.member_counts}});
    }
  }
  return traj;
}

}  // namespace plangan::planner
