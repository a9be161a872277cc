#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "taskbench/graph.hpp"

using namespace taskbench;

namespace {

TaskGraphSpec make(DependencePattern pattern, std::int64_t width, std::int64_t height) {
  TaskGraphSpec g;
  g.width = width;
  g.height = height;
  g.pattern = pattern;
  return g;
}

std::vector<std::int64_t> cols(const ColumnSet& s) { return s.to_vector(); }

using Cols = std::vector<std::int64_t>;

// Brute-force converse of deps(): scan every candidate successor.
Cols reverse_oracle(const TaskGraphSpec& g, Point p) {
  Cols out;
  if (!contains_point(g, p)) return out;
  for (std::int64_t j = 0; j < g.width; ++j) {
    if (contains_point(g, {p.t + 1, j}) && deps(g, {p.t + 1, j}).contains(p.i)) out.push_back(j);
  }
  return out;
}

std::vector<DependencePattern> all_patterns() {
  std::vector<DependencePattern> out = {
      DependencePattern::trivial(), DependencePattern::stencil(), DependencePattern::fft(),
      DependencePattern::sweep(),   DependencePattern::tree(),    DependencePattern::random(0.5, 7),
      DependencePattern::random(0.1, 99)};
  for (std::int64_t k = 0; k <= 9; ++k) {
    out.push_back(DependencePattern::nearest(k));
    out.push_back(DependencePattern::spread(k));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// ColumnSet
// ---------------------------------------------------------------------------

TEST(ColumnSet, CoalescesRuns) {
  auto s = ColumnSet::from_columns({5, 3, 4, 9, 9, 1});
  ASSERT_EQ(s.runs().size(), 3u);
  EXPECT_EQ(s.runs()[0], (ColumnRun{1, 1}));
  EXPECT_EQ(s.runs()[1], (ColumnRun{3, 5}));
  EXPECT_EQ(s.runs()[2], (ColumnRun{9, 9}));
  EXPECT_EQ(s.size(), 5u);
  EXPECT_EQ(cols(s), (Cols{1, 3, 4, 5, 9}));
  EXPECT_TRUE(s.contains(4));
  EXPECT_FALSE(s.contains(2));
  EXPECT_FALSE(s.contains(10));
}

TEST(ColumnSet, ClippedRunCanBeEmpty) {
  EXPECT_TRUE(ColumnSet::clipped_run(5, 4, 0, 10).empty());
  EXPECT_TRUE(ColumnSet::clipped_run(-3, -1, 0, 10).empty());
  EXPECT_EQ(cols(ColumnSet::clipped_run(-1, 1, 0, 10)), (Cols{0, 1}));
  EXPECT_EQ(ColumnSet{}.begin(), ColumnSet{}.end());
}

// ---------------------------------------------------------------------------
// contains_point
// ---------------------------------------------------------------------------

TEST(ContainsPoint, StencilRange) {
  auto g = make(DependencePattern::stencil(), 4, 4);
  EXPECT_TRUE(contains_point(g, {2, 3}));
  EXPECT_FALSE(contains_point(g, {2, 4}));
  EXPECT_FALSE(contains_point(g, {4, 0}));
  EXPECT_FALSE(contains_point(g, {-1, 0}));
}

TEST(ContainsPoint, TreeFanOutMatchesSimulatedBroadcast) {
  const std::int64_t w = 8;
  auto g = make(DependencePattern::tree(), w, 6);
  // Simulate a broadcast: every active node adds a partner half a block away.
  std::set<std::int64_t> active = {0};
  for (std::int64_t t = 0; t < g.height; ++t) {
    for (std::int64_t i = 0; i < w; ++i) {
      EXPECT_EQ(contains_point(g, {t, i}), active.count(i) == 1) << "t=" << t << " i=" << i;
    }
    std::set<std::int64_t> next = active;
    const std::int64_t half = w >> (t + 1);
    if (half >= 1) {
      for (std::int64_t a : active) next.insert(a + half);
    } else {
      for (std::int64_t i = 0; i < w; ++i) next.insert(i);
    }
    active = next;
  }
  EXPECT_FALSE(contains_point(g, {1, 3}));
  EXPECT_TRUE(contains_point(g, {1, 4}));
}

// ---------------------------------------------------------------------------
// deps: worked examples
// ---------------------------------------------------------------------------

TEST(Deps, Stencil) {
  auto g = make(DependencePattern::stencil(), 16, 4);
  EXPECT_EQ(cols(deps(g, {1, 5})), (Cols{4, 5, 6}));
  EXPECT_EQ(cols(deps(g, {1, 0})), (Cols{0, 1}));
  EXPECT_EQ(cols(deps(g, {1, 15})), (Cols{14, 15}));
  EXPECT_TRUE(deps(g, {0, 5}).empty());
}

TEST(Deps, FftWrapsExponent) {
  auto g = make(DependencePattern::fft(), 16, 12);
  EXPECT_EQ(cols(deps(g, {3, 5})), (Cols{1, 5, 9}));
  EXPECT_EQ(cols(deps(g, {1, 5})), (Cols{4, 5, 6}));
  // log2(16) = 4 levels, so t = 5 wraps back to offset 1.
  EXPECT_EQ(cols(deps(g, {5, 5})), (Cols{4, 5, 6}));
  EXPECT_EQ(cols(deps(g, {4, 0})), (Cols{0, 8}));
}

TEST(Deps, Sweep) {
  auto g = make(DependencePattern::sweep(), 16, 4);
  EXPECT_EQ(cols(deps(g, {2, 5})), (Cols{4, 5}));
  EXPECT_EQ(cols(deps(g, {2, 0})), (Cols{0}));
}

TEST(Deps, TreeParentsAndAfterFanOut) {
  auto g = make(DependencePattern::tree(), 8, 8);
  EXPECT_EQ(cols(deps(g, {1, 4})), (Cols{0}));
  EXPECT_EQ(cols(deps(g, {2, 6})), (Cols{4}));
  EXPECT_EQ(cols(deps(g, {3, 7})), (Cols{6}));
  // After fan-out (t > 3): {i, i + 2^(t-1-3)}.
  EXPECT_EQ(cols(deps(g, {4, 2})), (Cols{2, 3}));
  EXPECT_EQ(cols(deps(g, {5, 2})), (Cols{2, 4}));
  EXPECT_EQ(cols(deps(g, {6, 2})), (Cols{2, 6}));
  EXPECT_EQ(cols(deps(g, {7, 2})), (Cols{2}));
}

TEST(Deps, NearestWindow) {
  auto g = make(DependencePattern::nearest(5), 32, 4);
  EXPECT_EQ(cols(deps(g, {1, 10})), (Cols{8, 9, 10, 11, 12}));
  auto even = make(DependencePattern::nearest(4), 32, 4);
  EXPECT_EQ(cols(deps(even, {1, 10})), (Cols{8, 9, 10, 11}));
  auto zero = make(DependencePattern::nearest(0), 32, 4);
  for (std::int64_t i = 0; i < 32; ++i) EXPECT_TRUE(deps(zero, {2, i}).empty());
}

TEST(Deps, SpreadStride) {
  auto g = make(DependencePattern::spread(5), 20, 4);
  EXPECT_EQ(cols(deps(g, {1, 3})), (Cols{3, 7, 11, 15, 19}));
  // Wraparound: i = 18 with stride 4.
  EXPECT_EQ(cols(deps(g, {1, 18})), (Cols{2, 6, 10, 14, 18}));
}

TEST(Deps, RandomIsDeterministicAndSeeded) {
  auto a = make(DependencePattern::random(0.5, 1234), 64, 16);
  auto b = a;
  auto c = make(DependencePattern::random(0.5, 4321), 64, 16);
  bool any_diff = false;
  for (std::int64_t t = 1; t < 16; ++t) {
    for (std::int64_t i = 0; i < 64; ++i) {
      EXPECT_EQ(deps(a, {t, i}), deps(b, {t, i}));
      any_diff |= deps(a, {t, i}) != deps(c, {t, i});
    }
  }
  EXPECT_TRUE(any_diff);
  // graph_id keys the stream too.
  b.graph_id = 1;
  bool id_diff = false;
  for (std::int64_t i = 0; i < 64; ++i) id_diff |= deps(a, {1, i}) != deps(b, {1, i});
  EXPECT_TRUE(id_diff);
}

TEST(Deps, RandomFractionIsRespected) {
  auto g = make(DependencePattern::random(0.5, 5), 64, 64);
  const double mean = static_cast<double>(num_deps(g)) / (63.0 * 64.0 * 64.0);
  EXPECT_NEAR(mean, 0.5, 0.02);
  auto none = make(DependencePattern::random(0.0, 5), 16, 4);
  EXPECT_EQ(num_deps(none), 0u);
  auto all = make(DependencePattern::random(1.0, 5), 16, 4);
  EXPECT_EQ(num_deps(all), 3u * 16u * 16u);
}

// ---------------------------------------------------------------------------
// reverse_deps
// ---------------------------------------------------------------------------

TEST(ReverseDeps, Examples) {
  auto st = make(DependencePattern::stencil(), 16, 4);
  EXPECT_EQ(cols(reverse_deps(st, {0, 5})), (Cols{4, 5, 6}));
  auto sw = make(DependencePattern::sweep(), 16, 4);
  EXPECT_EQ(cols(reverse_deps(sw, {0, 5})), (Cols{5, 6}));
  for (const auto& p : all_patterns()) {
    auto g = make(p, 16, 4);
    for (std::int64_t i = 0; i < 16; ++i) EXPECT_TRUE(reverse_deps(g, {3, i}).empty());
  }
}

// ---------------------------------------------------------------------------
// Properties, brute force over small graphs
// ---------------------------------------------------------------------------

TEST(GraphProperties, ConverseAndRangeForAllPatterns) {
  for (const auto& pattern : all_patterns()) {
    for (std::int64_t w : {1, 2, 3, 4, 5, 8, 13, 16, 32, 64}) {
      if (pattern_needs_power_of_two(pattern.kind) && !std::has_single_bit(static_cast<std::uint64_t>(w))) {
        continue;
      }
      auto g = make(pattern, w, 16);
      for (std::int64_t t = 0; t < g.height; ++t) {
        for (std::int64_t i = 0; i < w; ++i) {
          const Point p{t, i};
          const auto d = deps(g, p);
          for (std::int64_t j : d) {
            ASSERT_GE(j, 0);
            ASSERT_LT(j, w);
            // Only in-graph producers one step back.
            ASSERT_TRUE(contains_point(g, {t - 1, j}))
                << to_string(pattern.kind) << " w=" << w << " t=" << t << " i=" << i;
          }
          ASSERT_EQ(cols(reverse_deps(g, p)), reverse_oracle(g, p))
              << to_string(pattern.kind) << " radix=" << pattern.radix << " w=" << w
              << " t=" << t << " i=" << i;
        }
      }
    }
  }
}

TEST(GraphProperties, NearestMatchesStencilAndSizeAwayFromEdges) {
  auto st = make(DependencePattern::stencil(), 32, 4);
  auto n3 = make(DependencePattern::nearest(3), 32, 4);
  for (std::int64_t i = 1; i < 31; ++i) EXPECT_EQ(deps(st, {1, i}), deps(n3, {1, i}));
  for (std::int64_t k = 0; k <= 9; ++k) {
    auto g = make(DependencePattern::nearest(k), 32, 4);
    EXPECT_EQ(deps(g, {2, 16}).size(), static_cast<std::size_t>(k));
    auto narrow = make(DependencePattern::nearest(k), 4, 4);
    for (std::int64_t i = 0; i < 4; ++i) EXPECT_LE(deps(narrow, {2, i}).size(), std::min<std::size_t>(k, 4));
  }
}

TEST(GraphProperties, FftAndTreeNeverStarve) {
  for (std::int64_t w : {1, 2, 4, 8, 16, 32, 64}) {
    for (auto p : {DependencePattern::fft(), DependencePattern::tree()}) {
      auto g = make(p, w, 16);
      for (std::int64_t t = 1; t < 16; ++t) {
        for (std::int64_t i = 0; i < w; ++i) {
          if (contains_point(g, {t, i})) {
            EXPECT_FALSE(deps(g, {t, i}).empty());
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Counts
// ---------------------------------------------------------------------------

TEST(Counts, StencilClosedForm) {
  auto g = make(DependencePattern::stencil(), 4, 3);
  EXPECT_EQ(num_tasks(g), 12u);
  EXPECT_EQ(num_deps(g), 20u);
}

TEST(Counts, TrivialHasNoDeps) {
  auto g = make(DependencePattern::trivial(), 17, 9);
  EXPECT_EQ(num_deps(g), 0u);
  EXPECT_EQ(num_tasks(g), 17u * 9u);
}

TEST(Counts, NumTasksMatchesEnumeration) {
  for (const auto& p : all_patterns()) {
    for (std::int64_t w : {1, 2, 8, 16}) {
      for (std::int64_t h : {1, 2, 3, 5, 16}) {
        auto g = make(p, w, h);
        std::uint64_t n = 0;
        for (std::int64_t t = 0; t < h; ++t) {
          for (std::int64_t i = 0; i < w; ++i) n += contains_point(g, {t, i}) ? 1 : 0;
        }
        EXPECT_EQ(num_tasks(g), n) << to_string(p.kind) << " w=" << w << " h=" << h;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

TEST(Validate, RejectsBadSpecs) {
  EXPECT_THROW(validate(make(DependencePattern::fft(), 12, 4)), std::invalid_argument);
  EXPECT_THROW(validate(make(DependencePattern::tree(), 6, 4)), std::invalid_argument);
  EXPECT_THROW(validate(make(DependencePattern::stencil(), 0, 4)), std::invalid_argument);
  EXPECT_THROW(validate(make(DependencePattern::stencil(), 4, 0)), std::invalid_argument);
  auto g = make(DependencePattern::stencil(), 4, 4);
  g.output_bytes = 15;
  EXPECT_THROW(validate(g), std::invalid_argument);
  EXPECT_NO_THROW(validate(make(DependencePattern::fft(), 16, 4)));
}

TEST(PatternNames, RoundTrip) {
  for (PatternKind k : kAllPatterns) EXPECT_EQ(parse_pattern_kind(to_string(k)), k);
  EXPECT_FALSE(parse_pattern_kind("hexagon"));
}
