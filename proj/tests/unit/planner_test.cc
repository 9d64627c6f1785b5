#include "plangan/planner/planner.h"

#include <gtest/gtest.h>

#include <cmath>

#include "plangan/core/errors.h"
#include "plangan/envs/four_rooms.h"
#include "plangan/planner/ground_truth.h"

namespace plangan::planner {
namespace {

// Member m moves the point by (m + 1) * 0.01 along the noise direction and
// reports the noise as its action. Good enough to exercise routing.
class DriftGenerator final : public gan::TrajectoryGenerator {
 public:
  explicit DriftGenerator(int members) : members_(members) {}
  int member_count() const override { return members_; }
  int noise_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  gan::GeneratedStep Generate(int member, const DenseMatrix& states, const DenseMatrix&,
                              const DenseMatrix& noise) const override {
    gan::GeneratedStep out;
    out.actions = noise.array().tanh().matrix();
    out.next_states = states;
    out.next_states.leftCols(2) += 0.01 * (member + 1) * out.actions;
    return out;
  }

 private:
  int members_;
};

class EmptyGenerator final : public gan::TrajectoryGenerator {
 public:
  int member_count() const override { return 0; }
  int noise_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  gan::GeneratedStep Generate(int, const DenseMatrix&, const DenseMatrix&,
                              const DenseMatrix&) const override {
    return {};
  }
};

Vector V2(double a, double b) { return (Vector(2) << a, b).finished(); }

std::vector<ScoredProposal> Scored(const std::vector<double>& raw,
                                   const std::vector<Vector>& actions) {
  std::vector<ScoredProposal> out;
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({actions[i], Vector(), raw[i], 0.0});
  return out;
}

TEST(Planner, ScoreCountsAchievingStates) {
  envs::FourRooms env;
  const Vector goal = V2(0.8, 0.8);
  DenseMatrix states = DenseMatrix::Zero(51, 4);
  states.col(0).setConstant(0.2);
  states.col(1).setConstant(0.2);
  for (int r = 34; r < 51; ++r) states.row(r).head(2) << 0.81, 0.79;
  EXPECT_DOUBLE_EQ(ScoreRollout(env, states, goal), 17.0 / 51.0);
  states.col(0).setConstant(0.8);
  states.col(1).setConstant(0.8);
  EXPECT_EQ(ScoreRollout(env, states, goal), 1.0);
  states.col(0).setConstant(0.1);
  EXPECT_EQ(ScoreRollout(env, states, goal), 0.0);
  EXPECT_THROW(ScoreRollout(env, DenseMatrix(0, 4), goal), ConfigError);
}

TEST(Planner, MinMaxNormalization) {
  const auto n = NormalizeScores({0.2, 0.6, 0.4});
  ASSERT_TRUE(n);
  EXPECT_DOUBLE_EQ((*n)[0], 0.0);
  EXPECT_DOUBLE_EQ((*n)[1], 1.0);
  EXPECT_DOUBLE_EQ((*n)[2], 0.5);
  EXPECT_FALSE(NormalizeScores({0.0, 0.0}));
  EXPECT_THROW(NormalizeScores({}), ConfigError);
}

TEST(Planner, SoftmaxWeightsHandComputed) {
  const std::vector<Vector> actions = {V2(1.0, 0.0), V2(0.0, 1.0), V2(-1.0, -1.0)};
  auto props = Scored({1.0, 0.5, 0.0}, actions);
  const Vector got = SelectAction(props, SelectionMode::kSoftmax, 5.0);
  const double w0 = std::exp(5.0), w1 = std::exp(2.5), w2 = 1.0, z = w0 + w1 + w2;
  EXPECT_NEAR(got[0], (w0 - w2) / z, 1e-12);
  EXPECT_NEAR(got[1], (w1 - w2) / z, 1e-12);
  EXPECT_DOUBLE_EQ(props[1].normalized_score, 0.5);
}

TEST(Planner, TiedScoresFallBack) {
  const std::vector<Vector> actions = {V2(1.0, 0.0), V2(0.0, 1.0), V2(0.5, 0.5)};
  auto props = Scored({0.0, 0.0, 0.0}, actions);
  const Vector mean = SelectAction(props, SelectionMode::kSoftmax, 5.0);
  EXPECT_NEAR(mean[0], 0.5, 1e-15);
  EXPECT_NEAR(mean[1], 0.5, 1e-15);
  EXPECT_TRUE(SelectAction(props, SelectionMode::kMax, 5.0) == actions[0]);
  std::vector<ScoredProposal> none;
  EXPECT_THROW(SelectAction(none, SelectionMode::kMax, 5.0), ConfigError);
}

TEST(Planner, SelectionProperties) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = static_cast<int>(rng.Index(1, 8));
    std::vector<Vector> actions;
    std::vector<double> raw;
    for (int i = 0; i < q; ++i) {
      actions.push_back(V2(rng.Uniform(-1, 1), rng.Uniform(-1, 1)));
      raw.push_back(std::floor(rng.Uniform(0, 5)) / 5.0);
    }
    auto a = Scored(raw, actions);
    const Vector soft = SelectAction(a, SelectionMode::kSoftmax, 5.0);
    for (int d = 0; d < 2; ++d) {
      double lo = 1e9, hi = -1e9;
      for (const auto& x : actions) lo = std::min(lo, x[d]), hi = std::max(hi, x[d]);
      ASSERT_GE(soft[d], lo - 1e-12);
      ASSERT_LE(soft[d], hi + 1e-12);
    }
    for (const auto& p : a) {
      ASSERT_GE(p.normalized_score, 0.0);
      ASSERT_LE(p.normalized_score, 1.0);
    }

    const Vector best = SelectAction(a, SelectionMode::kMax, 5.0);
    bool member = false;
    for (const auto& x : actions) member |= (x == best);
    ASSERT_TRUE(member);

    std::vector<double> shifted = raw;
    for (double& r : shifted) r += 0.37;
    auto b = Scored(shifted, actions);
    ASSERT_LT((SelectAction(b, SelectionMode::kSoftmax, 5.0) - soft).norm(), 1e-12);
    ASSERT_TRUE(SelectAction(b, SelectionMode::kMax, 5.0) == best);
  }
}

TEST(Planner, LargeAlphaApproachesMax) {
  const std::vector<Vector> actions = {V2(0.1, 0.2), V2(0.9, -0.3), V2(-0.5, 0.5)};
  auto props = Scored({0.3, 0.8, 0.2}, actions);
  const Vector soft = SelectAction(props, SelectionMode::kSoftmax, 1e6);
  const Vector best = SelectAction(props, SelectionMode::kMax, 1e6);
  EXPECT_TRUE(best == actions[1]);
  EXPECT_LT((soft - best).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Planner, ProposalsDeterministicAndCounted) {
  DriftGenerator gen(3);
  const Vector s = (Vector(4) << 0.25, 0.25, 0.0, 0.0).finished();
  const auto a = ProposeInitial(gen, s, V2(0.8, 0.8), 25, 7);
  const auto b = ProposeInitial(gen, s, V2(0.8, 0.8), 25, 7);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].action == b[i].action);
    EXPECT_EQ(a[i].member, b[i].member);
  }
  DriftGenerator single(1);
  for (const auto& p : ProposeInitial(single, s, V2(0.8, 0.8), 10, 8)) EXPECT_EQ(p.member, 0);
  EmptyGenerator empty;
  EXPECT_THROW(ProposeInitial(empty, s, V2(0.8, 0.8), 5, 1), ConfigError);
}

TEST(Planner, FuturesShapeAndMemberHistogram) {
  DriftGenerator gen(4);
  Proposal p{V2(0, 0), (Vector(4) << 0.5, 0.25, 0.0, 0.0).finished(), 0};
  const auto f = SimulateFutures(gen, p, V2(0.8, 0.8), 2000, 50, 3);
  ASSERT_EQ(f.sequences.size(), 2000u);
  EXPECT_EQ(f.sequences[0].rows(), 51);
  EXPECT_TRUE(f.sequences[5].row(0).transpose() == p.next_state);
  std::int64_t total = 0;
  for (auto c : f.member_counts) total += c;
  ASSERT_EQ(total, 100000);
  for (auto c : f.member_counts) EXPECT_NEAR(static_cast<double>(c) / total, 0.25, 0.01);

  const auto one = SimulateFutures(gen, p, V2(0.8, 0.8), 3, 1, 4);
  EXPECT_EQ(one.sequences[2].rows(), 2);
}

TEST(Planner, PlanStepMatchesPerProposalFutures) {
  envs::FourRooms env;
  DriftGenerator gen(3);
  PlannerConfig cfg;
  cfg.proposals = 4;
  cfg.copies = 6;
  cfg.horizon = 10;
  const Vector s = (Vector(4) << 0.7, 0.7, 0.0, 0.0).finished();
  const Vector goal = V2(0.75, 0.75);
  const std::uint64_t seed = 99;
  const auto decision = PlanStep(env, gen, s, goal, cfg, seed);
  const auto proposals = ProposeInitial(gen, s, goal, cfg.proposals, DeriveSeed(seed, 0));
  ASSERT_EQ(decision.proposals.size(), 4u);
  bool any_nonzero = false;
  for (int q = 0; q < cfg.proposals; ++q) {
    EXPECT_TRUE(decision.proposals[q].action == proposals[q].action);
    const auto f = SimulateFutures(gen, proposals[q], goal, cfg.copies, cfg.horizon,
                                   DeriveSeed(DeriveSeed(seed, 1), q));
    double mean = 0.0;
    for (const auto& seq : f.sequences) mean += ScoreRollout(env, seq, goal);
    mean /= cfg.copies;
    EXPECT_NEAR(decision.proposals[q].raw_score, mean, 1e-15);
    any_nonzero |= mean > 0.0;
  }
  EXPECT_TRUE(any_nonzero);
}

TEST(Planner, VariantsSkipScoring) {
  envs::FourRooms env;
  DriftGenerator gen(3);
  PlannerConfig cfg;
  cfg.proposals = 5;
  cfg.copies = 2;
  cfg.horizon = 3;
  const Vector s = (Vector(4) << 0.25, 0.25, 0.0, 0.0).finished();
  cfg.variant = Variant::kNoPlanner;
  auto d = PlanStep(env, gen, s, V2(0.8, 0.8), cfg, 5);
  ASSERT_EQ(d.proposals.size(), 1u);
  EXPECT_TRUE(d.action == d.proposals[0].action);
  cfg.variant = Variant::kNoPlannerAvg;
  d = PlanStep(env, gen, s, V2(0.8, 0.8), cfg, 5);
  ASSERT_EQ(d.proposals.size(), 5u);
  Vector mean = Vector::Zero(2);
  for (const auto& p : d.proposals) mean += p.action;
  EXPECT_LT((d.action - mean / 5.0).norm(), 1e-15);
}

TEST(Planner, EpisodeLengthDeterminismAndDiagnostics) {
  envs::FourRooms env;
  GroundTruthGenerator gen(env);
  PlannerConfig cfg;
  cfg.proposals = 5;
  cfg.copies = 4;
  cfg.horizon = 50;
  Rng a(11), b(11);
  int records = 0;
  const auto t1 = PlanEpisode(env, gen, V2(0.8, 0.2), cfg, a,
                              [&](const nlohmann::json& r) {
                                ++records;
                                EXPECT_EQ(r["raw_scores"].size(), 5u);
                              });
  const auto t2 = PlanEpisode(env, gen, V2(0.8, 0.2), cfg, b);
  EXPECT_EQ(t1.length(), 50);
  EXPECT_EQ(records, 50);
  EXPECT_TRUE(t1 == t2);
  EXPECT_THROW(PlanEpisode(env, gen, Vector::Zero(3), cfg, a), ConfigError);
}

TEST(Planner, StubGeneratorReachesGoals) {
  envs::FourRooms env;
  GroundTruthGenerator gen(env);
  PlannerConfig cfg;
  cfg.proposals = 10;
  cfg.copies = 20;
  Rng goals(DeriveSeed(3, 0)), episodes(DeriveSeed(3, 1));
  int hits = 0;
  for (int i = 0; i < 10; ++i) {
    const Vector g = env.SampleGoal(goals);
    const auto tr = PlanEpisode(env, gen, g, cfg, episodes);
    hits += env.Achieves(tr.achieved_goals.back(), g);
  }
  EXPECT_GE(hits, 9);
}

TEST(Planner, ConfigValidation) {
  PlannerConfig c;
  c.proposals = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.alpha = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c.mode = SelectionMode::kMax;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(ParseSelectionMode("max"), SelectionMode::kMax);
  EXPECT_EQ(ParseVariant(ToString(Variant::kNoPlannerAvg)), Variant::kNoPlannerAvg);
  EXPECT_THROW(ParseSelectionMode("argmax"), ConfigError);
}

}  // namespace
}  // namespace plangan::planner
