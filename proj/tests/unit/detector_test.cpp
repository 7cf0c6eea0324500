#include <random>

#include <gtest/gtest.h>

#include "sddlab/detector.hpp"

namespace sddlab::sdd {
namespace {

// Independent oracle at delta = 0: drop repeated values, take the sign of
// each remaining difference, count maximal runs of equal sign.
bool reversal_oracle(const std::vector<double>& p) {
  std::vector<double> distinct;
  for (double v : p) {
    if (distinct.empty() || distinct.back() != v) distinct.push_back(v);
  }
  int runs = 0;
  int last = 0;
  for (std::size_t i = 1; i < distinct.size(); ++i) {
    const int sign = distinct[i] > distinct[i - 1] ? 1 : -1;
    if (sign != last) ++runs;
    last = sign;
  }
  return runs >= 3;
}

std::vector<double> canonical_curve(double delta) {
  // Plateau, drop, rise, collapse; every move is at least 5 delta.
  const double a = 5 * delta;
  return {0.80, 0.80, 0.80 - a, 0.80 - 2 * a, 0.80 - 3 * a, 0.80 - 2 * a, 0.80 - a,
          0.80 - 0.5 * a, 0.40, 0.25};
}

TEST(Step, FirstObservationOnlyAnchors) {
  const auto s = step(initial_state(0.0), 0.7);
  EXPECT_FALSE(s.sdd_flag);
  EXPECT_EQ(s.p_prev, 0.7);
  EXPECT_FALSE(s.already_increased || s.already_decreased);
}

TEST(Step, HandTraceTwoDecreasingRuns) {
  auto s = initial_state(0.0);
  for (double p : {0.90, 0.85, 0.88}) {
    s = step(s, p);
    EXPECT_FALSE(s.sdd_flag);
  }
  s = step(s, 0.84);
  EXPECT_TRUE(s.sdd_flag);
}

TEST(Step, PureTransition) {
  auto s = initial_state(0.01);
  s = step(s, 0.5);
  s = step(s, 0.4);
  EXPECT_EQ(step(s, 0.6), step(s, 0.6));
}

TEST(Step, FlatMovesLeaveStateUnchanged) {
  auto s = step(step(initial_state(0.05), 0.5), 0.3);
  EXPECT_EQ(step(s, 0.34), s);
  EXPECT_EQ(step(s, 0.26), s);
}

TEST(Step, AnchorAbsorbsSlowDrift) {
  // Each move is within delta of its predecessor, but the anchor catches
  // the accumulated drift.
  auto s = step(initial_state(0.05), 0.50);
  s = step(s, 0.47);
  EXPECT_EQ(s.p_prev, 0.50);
  s = step(s, 0.44);
  EXPECT_EQ(s.p_prev, 0.44);
  EXPECT_TRUE(s.prev_decreasing);
}

TEST(Step, InvariantsHoldOnRandomWalks) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    auto s = initial_state(0.02);
    bool flag = false;
    for (int i = 0; i < 15; ++i) {
      s = step(s, u(rng));
      EXPECT_FALSE(s.prev_increasing && s.prev_decreasing);
      EXPECT_TRUE(!flag || s.sdd_flag);
      flag = s.sdd_flag;
    }
  }
}

TEST(Detect, OracleEquivalenceExhaustive) {
  const double alphabet[] = {0.0, 0.1, 0.2, 0.3};
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (std::size_t len = 1; len <= 10; ++len) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < len; ++i) combos *= 4;
    std::vector<double> seq(len);
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < len; ++i, c /= 4) seq[i] = alphabet[c % 4];
      mismatches += detect_sdd(seq, 0.0).sdd != reversal_oracle(seq);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1398100u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(Detect, MonotoneAndConstantAreNegative) {
  EXPECT_FALSE(detect_sdd(std::vector<double>{0.9, 0.9, 0.8, 0.5, 0.5, 0.1}, 0.0).sdd);
  EXPECT_FALSE(detect_sdd(std::vector<double>{0.1, 0.2, 0.6, 0.9}, 0.0).sdd);
  EXPECT_FALSE(detect_sdd(std::vector<double>(8, 0.5), 0.0).sdd);
}

TEST(Detect, CanonicalShapeIsPositive) {
  const double delta = 0.005;
  const auto c = canonical_curve(delta);
  const auto v = detect_sdd(c, delta);
  EXPECT_TRUE(v.sdd);
  ASSERT_TRUE(v.trigger_index.has_value());
  EXPECT_EQ(*v.trigger_index, 8u);  // first point of the collapse
  EXPECT_EQ(v.tolerance, delta);
}

TEST(Detect, NoiseBelowToleranceIgnored) {
  std::vector<double> c{0.80, 0.797, 0.802, 0.799, 0.801, 0.60, 0.30};
  EXPECT_FALSE(detect_sdd(c, 0.005).sdd);
  EXPECT_TRUE(detect_sdd(c, 0.0).sdd);
}

TEST(Detect, ToleranceMonotonicity) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> grid(0, 20);
  const double deltas[] = {0.0, 0.01, 0.03, 0.05, 0.1, 0.2};
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<double> c(2 + trial % 9);
    for (double& v : c) v = 0.05 * grid(rng);
    bool prev = true;
    for (double d : deltas) {
      const bool now = detect_sdd(c, d).sdd;
      EXPECT_TRUE(prev || !now) << "trial " << trial << " delta " << d;
      prev = now;
    }
  }
}

TEST(Detect, AppendingNeverClearsFlag) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> c;
    bool seen = false;
    for (int i = 0; i < 12; ++i) {
      c.push_back(u(rng));
      const bool now = detect_sdd(c, 0.01).sdd;
      EXPECT_TRUE(!seen || now);
      seen = now;
    }
  }
}

TEST(Detect, SmoothingSuppressesSingleSpike) {
  std::vector<double> c{0.8, 0.8, 0.7, 0.8, 0.8, 0.5, 0.3};
  EXPECT_TRUE(detect_sdd(c, 0.005).sdd);
  const auto s = smooth(c, 3);
  EXPECT_NEAR(s[0], 0.8, 1e-12);
  EXPECT_NEAR(s[2], (0.8 + 0.7 + 0.8) / 3, 1e-12);
  EXPECT_EQ(smooth(c, 1), c);
  const auto v = detect_sdd(c, 0.005, 3);
  EXPECT_FALSE(v.sdd);
  EXPECT_EQ(v.smoothing_window, 3u);
}

TEST(Detect, CurveOverload) {
  Curve curve;
  for (double p : canonical_curve(0.01)) curve.push_back({0, 0.0, p});
  EXPECT_TRUE(detect_sdd_curve(curve, 0.01).sdd);
}

TEST(Phases, CanonicalShapeFourRanges) {
  const double delta = 0.005;
  const auto c = canonical_curve(delta);
  const auto seg = segment_phases(c, delta, c.front());
  EXPECT_EQ(seg.phases[0], (Range{0, 2}));
  EXPECT_EQ(seg.phases[1], (Range{2, 5}));
  EXPECT_EQ(seg.phases[2], (Range{5, 8}));
  EXPECT_EQ(seg.phases[3], (Range{8, 10}));
}

TEST(Phases, FlatThenCollapse) {
  std::vector<double> c{0.8, 0.8, 0.799, 0.6, 0.4, 0.2};
  const auto seg = segment_phases(c, 0.005, c.front());
  EXPECT_EQ(seg.phases[0], (Range{0, 3}));
  EXPECT_TRUE(seg.phases[1].empty());
  EXPECT_TRUE(seg.phases[2].empty());
  EXPECT_EQ(seg.phases[3], (Range{3, 6}));
}

TEST(Phases, SinglePoint) {
  std::vector<double> c{0.5};
  const auto seg = segment_phases(c, 0.005, 0.5);
  EXPECT_EQ(seg.phases[0], (Range{0, 1}));
  for (int i = 1; i < 4; ++i) EXPECT_TRUE(seg.phases[i].empty());
}

TEST(Phases, PartitionInOrderOnRandomCurves) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> c(1 + trial % 15);
    for (double& v : c) v = u(rng);
    const auto seg = segment_phases(c, 0.01, c.front());
    std::size_t cursor = 0;
    for (const auto& r : seg.phases) {
      if (r.empty()) continue;
      EXPECT_EQ(r.begin, cursor);
      cursor = r.end;
    }
    EXPECT_EQ(cursor, c.size());
    EXPECT_GE(seg.phases[0].size(), 1u);
  }
}

TEST(Bump, Examples) {
  EXPECT_DOUBLE_EQ(bump_magnitude(std::vector<double>{1.0, 1.4, 0.9}), 0.4);
  EXPECT_EQ(bump_magnitude(std::vector<double>{2.0, 1.5, 1.0, 0.5}), 0.0);
  EXPECT_EQ(bump_magnitude(std::vector<double>(5, 1.3)), 0.0);
  EXPECT_EQ(bump_magnitude(std::vector<double>{1.0}), 0.0);
}

TEST(Collapse, FirstBelowThreshold) {
  Curve c{{0, 0.0, 0.9}, {1, 0.2, 0.5}, {2, 0.36, 0.3}, {3, 0.488, 0.2}};
  EXPECT_EQ(collapse_sparsity(c, 0.375), 0.36);
  EXPECT_FALSE(collapse_sparsity(c, 0.1).has_value());
}

}  // namespace
}  // namespace sddlab::sdd
