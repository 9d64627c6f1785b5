#include "plangan/replay/replay_buffer.h"

#include <gtest/gtest.h>

#include <filesystem>

#include "plangan/core/errors.h"

namespace plangan::replay {
namespace {

// Straight-line trajectory whose achieved goal at step t is (id, t * step).
Trajectory Line(int id, int length, double step = 0.1) {
  Trajectory tr;
  for (int t = 0; t <= length; ++t) {
    Vector s(2);
    s << id, t * step;
    tr.states.push_back(s);
    tr.achieved_goals.push_back(s);
    if (t < length) tr.actions.push_back(Vector::Constant(1, id + 0.01 * t));
  }
  return tr;
}

TEST(ReplayBuffer, FilterRejectsStationaryButCountsSteps) {
  ReplayBuffer buf(10, 0.05);
  EXPECT_FALSE(buf.Store(Line(0, 50, 0.0)));
  EXPECT_EQ(buf.size(), 0u);
  EXPECT_EQ(buf.env_steps(), 50);
  EXPECT_EQ(buf.discarded_count(), 1);
  EXPECT_TRUE(buf.Store(Line(1, 50, 0.01)));
  EXPECT_EQ(buf.env_steps(), 100);
  EXPECT_EQ(buf.stored_count(), 1);
}

TEST(ReplayBuffer, FilterBoundaryIsInclusive) {
  ReplayBuffer buf(10, 0.05);
  Trajectory tr = Line(0, 1, 0.05);
  EXPECT_FALSE(buf.Store(tr));
  EXPECT_TRUE(buf.Store(Line(0, 1, 0.5)));
}

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer buf(3, 0.05);
  for (int i = 0; i < 5; ++i) buf.Store(Line(i, 4));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.evicted_count(), 2);
  EXPECT_EQ(buf.at(0).states[0][0], 2.0);
  EXPECT_EQ(buf.at(2).states[0][0], 4.0);
  EXPECT_EQ(buf.env_steps(), 20);
}

TEST(ReplayBuffer, MalformedTrajectoryRejectedWithoutCounting) {
  ReplayBuffer buf;
  Trajectory tr = Line(0, 5);
  tr.actions.pop_back();
  EXPECT_THROW(buf.Store(tr), ConfigError);
  EXPECT_EQ(buf.env_steps(), 0);
}

TEST(ReplayBuffer, EmptyBufferUnavailable) {
  ReplayBuffer buf;
  Rng rng(1);
  EXPECT_THROW(buf.SampleGanBatch(4, 5, rng), UnavailableError);
  EXPECT_THROW(buf.SampleModelBatch(4, rng), UnavailableError);
}

// Recovers the source index of an achieved goal from its y coordinate.
int IndexOf(const Vector& g) { return static_cast<int>(std::lround(g[1] / 0.1)); }

TEST(ReplayBuffer, GanWindowsShapeAndCausality) {
  ReplayBuffer buf;
  for (int i = 0; i < 20; ++i) buf.Store(Line(i, 50));
  Rng rng(2);
  const auto batch = buf.SampleGanBatch(128, 5, rng);
  ASSERT_EQ(batch.size(), 128u);
  for (const GanWindow& w : batch) {
    ASSERT_EQ(w.states.size(), 6u);
    ASSERT_EQ(w.actions.size(), 5u);
    ASSERT_EQ(w.goals.size(), 5u);
    ASSERT_GE(w.start, 0);
    ASSERT_LE(w.start, 45);
    const Trajectory& src = buf.at(w.trajectory_index);
    for (int i = 0; i <= 5; ++i) ASSERT_TRUE(w.states[i] == src.states[w.start + i]);
    for (int i = 0; i < 5; ++i) {
      ASSERT_TRUE(w.actions[i] == src.actions[w.start + i]);
      const int k = IndexOf(w.goals[i]);
      ASSERT_EQ(w.goals[i][0], src.states[0][0]);  // same trajectory
      ASSERT_GT(k, w.start + i);
      ASSERT_LE(k, 50);
      ASSERT_EQ(k, w.goal_indices[i]);
    }
  }
}

TEST(ReplayBuffer, LastOffsetOfFinalWindowIsForced) {
  ReplayBuffer buf;
  buf.Store(Line(0, 5));
  Rng rng(3);
  for (const GanWindow& w : buf.SampleGanBatch(50, 5, rng)) {
    EXPECT_EQ(w.start, 0);
    EXPECT_EQ(IndexOf(w.goals[4]), 5);
  }
}

TEST(ReplayBuffer, RelabelIndicesUniformOverLaterSteps) {
  ReplayBuffer buf;
  buf.Store(Line(0, 50));
  Rng rng(4);
  std::vector<int> counts(51, 0);
  const int n = 100000;
  int drawn = 0;
  while (drawn < n) {
    const auto batch = buf.SampleGanBatch(1000, 50, rng);  // tau = T forces t0 = 0
    for (const GanWindow& w : batch) ++counts[IndexOf(w.goals[0])];
    drawn += 1000;
  }
  EXPECT_EQ(counts[0], 0);
  const double expected = n / 50.0;
  double chi2 = 0.0;
  for (int k = 1; k <= 50; ++k) chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  // Upper 1% point of chi-squared with 49 degrees of freedom.
  EXPECT_LT(chi2, 74.919);
}

TEST(ReplayBuffer, ModelBatchTransitionsAreContiguous) {
  ReplayBuffer buf;
  for (int i = 0; i < 7; ++i) buf.Store(Line(i, 3 + i));
  Rng rng(5);
  const auto batch = buf.SampleModelBatch(256, rng);
  ASSERT_EQ(batch.size(), 256u);
  for (const Transition& t : batch) {
    const Trajectory& src = buf.at(t.trajectory_index);
    ASSERT_TRUE(t.state == src.states[t.step]);
    ASSERT_TRUE(t.action == src.actions[t.step]);
    ASSERT_TRUE(t.next_state == src.states[t.step + 1]);
  }
}

TEST(ReplayBuffer, SingleTransitionAlwaysSampled) {
  ReplayBuffer buf;
  buf.Store(Line(3, 1, 1.0));
  Rng rng(6);
  for (const Transition& t : buf.SampleModelBatch(20, rng)) {
    EXPECT_EQ(t.step, 0);
    EXPECT_EQ(t.next_state[1], 1.0);
  }
}

TEST(ReplayBuffer, SamplingDeterministicAndSaveLoadExact) {
  ReplayBuffer buf(4, 0.05);
  for (int i = 0; i < 6; ++i) buf.Store(Line(i, 6, i % 2 ? 0.1 : 0.0));
  Rng a(7), b(7);
  const auto x = buf.SampleGanBatch(10, 3, a);
  const auto y = buf.SampleGanBatch(10, 3, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].goal_indices, y[i].goal_indices);

  const auto dir = std::filesystem::temp_directory_path() / "plangan_replay_test";
  std::filesystem::remove_all(dir);
  buf.Save(dir);
  const ReplayBuffer loaded = ReplayBuffer::Load(dir);
  EXPECT_TRUE(loaded == buf);
  EXPECT_EQ(loaded.discarded_count(), 3);
  EXPECT_EQ(loaded.env_steps(), 36);
  EXPECT_THROW(ReplayBuffer::Load(dir / "missing"), IoError);
}

}  // namespace
}  // namespace plangan::replay
