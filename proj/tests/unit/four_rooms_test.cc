#include "plangan/envs/four_rooms.h"

#include <gtest/gtest.h>

#include "plangan/core/errors.h"

namespace plangan::envs {
namespace {

Vector V(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Interior walls written out by hand: a 0.02-thick cross at 0.5 with 0.2-wide
// gaps centred at 0.25 and 0.75 in each half.
bool InsideWallOracle(double x, double y) {
  auto in_cross_band = [](double c) { return c > 0.49 && c < 0.51; };
  auto in_solid_span = [](double c) {
    return (c > 0.0 && c < 0.15) || (c > 0.35 && c < 0.65) || (c > 0.85 && c < 1.0);
  };
  return (in_cross_band(x) && in_solid_span(y)) || (in_cross_band(y) && in_solid_span(x));
}

TEST(FourRooms, ResetDeterministicAtRestNearStart) {
  FourRooms env;
  const Observation a = env.Reset(std::uint64_t{5});
  const Observation b = env.Reset(std::uint64_t{5});
  EXPECT_TRUE(a.state == b.state);
  EXPECT_EQ(a.state[2], 0.0);
  EXPECT_EQ(a.state[3], 0.0);
  EXPECT_LE(std::abs(a.state[0] - 0.25), 0.01);
  EXPECT_LE(std::abs(a.state[1] - 0.25), 0.01);
  EXPECT_TRUE(a.achieved_goal == a.state.head(2));
}

TEST(FourRooms, ZeroActionAtRestStaysPut) {
  FourRooms env;
  const Vector s = V({0.3, 0.7, 0.0, 0.0});
  EXPECT_TRUE(env.StepState(s, V({0.0, 0.0})) == s);
}

TEST(FourRooms, SemiImplicitEulerInOpenSpace) {
  FourRooms env;
  const Vector next = env.StepState(V({0.2, 0.2, 0.1, -0.1}), V({1.0, 0.5}));
  const double vx = 0.1 + 1.0 * 0.05, vy = -0.1 + 0.5 * 0.05;
  EXPECT_DOUBLE_EQ(next[2], vx);
  EXPECT_DOUBLE_EQ(next[3], vy);
  EXPECT_DOUBLE_EQ(next[0], 0.2 + vx * 0.05);
  EXPECT_DOUBLE_EQ(next[1], 0.2 + vy * 0.05);
}

TEST(FourRooms, ActionsClippedAndSpeedCapped) {
  FourRooms env;
  const Vector a = env.StepState(V({0.2, 0.2, 0.49, 0.0}), V({10.0, 0.0}));
  EXPECT_DOUBLE_EQ(a[2], 0.5);
  EXPECT_THROW(env.StepState(V({0.2, 0.2, 0.0, 0.0}), V({NAN, 0.0})), NumericError);
  EXPECT_THROW(env.StepState(V({0.2, 0.2, 0.0, 0.0}), V({0.0})), ConfigError);
}

TEST(FourRooms, DrivingIntoVerticalWallStopsOnFace) {
  FourRooms env;
  // Solid part of the vertical wall at y = 0.05; the face is x = 0.49.
  const Vector next = env.StepState(V({0.48, 0.05, 0.5, 0.0}), V({1.0, 0.0}));
  EXPECT_DOUBLE_EQ(next[0], 0.49);
  EXPECT_EQ(next[2], 0.0);
  EXPECT_DOUBLE_EQ(next[1], 0.05);
}

TEST(FourRooms, DrivingIntoHorizontalWallFromAboveStopsOnFace) {
  FourRooms env;
  const Vector next = env.StepState(V({0.5, 0.52, 0.0, -0.5}), V({0.0, -1.0}));
  EXPECT_DOUBLE_EQ(next[1], 0.51);
  EXPECT_EQ(next[3], 0.0);
}

TEST(FourRooms, DoorwayIsPassable) {
  FourRooms env;
  const Vector next = env.StepState(V({0.48, 0.25, 0.5, 0.0}), V({1.0, 0.0}));
  EXPECT_GT(next[0], 0.5);
  EXPECT_GT(next[2], 0.0);
}

TEST(FourRooms, OuterBoundaryClamps) {
  FourRooms env;
  const Vector next = env.StepState(V({0.01, 0.99, -0.5, 0.5}), V({-1.0, 1.0}));
  EXPECT_EQ(next[0], 0.0);
  EXPECT_EQ(next[1], 1.0);
  EXPECT_EQ(next[2], 0.0);
  EXPECT_EQ(next[3], 0.0);
}

TEST(FourRooms, WallGeometryMatchesHandLayout) {
  FourRooms env;
  Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.Uniform(0, 1), y = rng.Uniform(0, 1);
    ASSERT_EQ(env.Blocked(x, y), InsideWallOracle(x, y)) << x << "," << y;
  }
}

// Axis-aligned move at a fixed y: the first wall face on the segment is
// where the mass must stop.
TEST(FourRooms, HorizontalSweepAgainstSegmentOracle) {
  FourRooms env;
  Rng rng(12);
  for (int i = 0; i < 20000; ++i) {
    double x, y;
    do {
      x = rng.Uniform(0, 1);
      y = rng.Uniform(0, 1);
    } while (InsideWallOracle(x, y));
    const double v = rng.Uniform(-0.5, 0.5);
    const Vector next = env.StepState(V({x, y, v, 0.0}), V({0.0, 0.0}));
    const double target = x + v * 0.05;
    double expect = std::clamp(target, 0.0, 1.0);
    bool blocked = target < 0.0 || target > 1.0;
    if (y > 0.49 && y < 0.51) {
      // Inside the horizontal wall band: solid spans in x.
      for (auto [lo, hi] : {std::pair{0.0, 0.15}, {0.35, 0.65}, {0.85, 1.0}}) {
        if (v > 0 && x <= lo && target > lo && lo > 0.0) { expect = std::min(expect, lo); blocked = true; }
        if (v < 0 && x >= hi && target < hi && hi < 1.0) { expect = std::max(expect, hi); blocked = true; }
      }
    }
    const bool solid_y = (y > 0.0 && y < 0.15) || (y > 0.35 && y < 0.65) || (y > 0.85 && y < 1.0);
    if (solid_y) {
      if (v > 0 && x <= 0.49 && target > 0.49) { expect = 0.49; blocked = true; }
      if (v < 0 && x >= 0.51 && target < 0.51) { expect = 0.51; blocked = true; }
    }
    ASSERT_NEAR(next[0], expect, 1e-15) << x << "," << y << " v=" << v;
    if (blocked) ASSERT_EQ(next[2], 0.0);
    ASSERT_FALSE(InsideWallOracle(next[0], next[1]));
  }
}

TEST(FourRooms, RandomSweepNeverEntersWalls) {
  FourRooms env;
  Rng rng(13);
  for (int i = 0; i < 100000; ++i) {
    double x, y;
    do {
      x = rng.Uniform(0, 1);
      y = rng.Uniform(0, 1);
    } while (InsideWallOracle(x, y));
    const Vector s = V({x, y, rng.Uniform(-0.5, 0.5), rng.Uniform(-0.5, 0.5)});
    const Vector next = env.StepState(s, V({rng.Uniform(-2, 2), rng.Uniform(-2, 2)}));
    ASSERT_GE(next[0], 0.0);
    ASSERT_LE(next[0], 1.0);
    ASSERT_GE(next[1], 0.0);
    ASSERT_LE(next[1], 1.0);
    ASSERT_FALSE(InsideWallOracle(next[0], next[1])) << next.transpose();
  }
}

TEST(FourRooms, GoalsAvoidWallsAndAreReproducible) {
  FourRooms env;
  Rng rng(14), again(14);
  for (int i = 0; i < 10000; ++i) {
    const Vector g = env.SampleGoal(rng);
    ASSERT_FALSE(InsideWallOracle(g[0], g[1]));
    ASSERT_TRUE(g == env.SampleGoal(again));
  }
}

TEST(Achieves, ClosedThreshold) {
  const Vector a = V({0.0, 0.0});
  EXPECT_TRUE(Achieves(a, a, 0.05));
  EXPECT_TRUE(Achieves(a, V({0.05, 0.0}), 0.05));
  EXPECT_FALSE(Achieves(a, V({0.1, 0.0}), 0.05));
  EXPECT_EQ(Achieves(V({0.3, 0.4}), V({0.31, 0.42}), 0.05),
            Achieves(V({0.31, 0.42}), V({0.3, 0.4}), 0.05));
  EXPECT_THROW(Achieves(a, V({0.0}), 0.05), ConfigError);
}

TEST(MakeEnv, KnownIdsOnly) {
  EXPECT_EQ(MakeEnv("four_rooms")->spec().state_dim, 4);
  EXPECT_EQ(MakeEnv("reacher", 7)->spec().episode_length, 7);
  EXPECT_THROW(MakeEnv("fetch_push"), ConfigError);
  EXPECT_THROW(MakeEnv("four_rooms", 0), ConfigError);
}

}  // namespace
}  // namespace plangan::envs
