#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "taskbench/metg.hpp"

using namespace taskbench;

namespace {

EfficiencyCurve curve_of(std::vector<CurvePoint> pts) {
  EfficiencyCurve c;
  c.points = std::move(pts);
  c.peak_perf = 1.0;
  return c;
}

// Straight-line crossing in (log10 g, e), written independently of the
// library's bracket search.
double oracle_crossing(double g_hi, double e_hi, double g_lo, double e_lo, double th) {
  const double a = std::log10(g_hi), b = std::log10(g_lo);
  return std::pow(10.0, a + (b - a) * (e_hi - th) / (e_hi - e_lo));
}

TaskGraphSpec stencil(std::int64_t w, std::int64_t h) {
  TaskGraphSpec s;
  s.width = w;
  s.height = h;
  s.pattern = DependencePattern::stencil();
  s.kernel.kind = KernelKind::Compute;
  return s;
}

}  // namespace

TEST(Metg, ThreePointExample) {
  auto c = curve_of({{100.0, 0.9}, {10.0, 0.6}, {1.0, 0.2}});
  auto m = compute_metg(c, 0.5);
  ASSERT_EQ(m.status, MetgStatus::Ok);
  ASSERT_TRUE(m.metg_us);
  EXPECT_NEAR(*m.metg_us, 5.62, 0.01);
  EXPECT_NEAR(*m.metg_us, std::pow(10.0, 0.75), 1e-12);
  ASSERT_TRUE(m.bracket);
  EXPECT_EQ(m.bracket->above, (CurvePoint{10.0, 0.6}));
  EXPECT_EQ(m.bracket->below, (CurvePoint{1.0, 0.2}));
  EXPECT_FALSE(m.bracket->censored);
}

TEST(Metg, CensoredWhenNeverBelow) {
  auto m = compute_metg(curve_of({{100.0, 1.0}, {10.0, 0.8}, {2.0, 0.55}}), 0.5);
  ASSERT_EQ(m.status, MetgStatus::Ok);
  EXPECT_EQ(*m.metg_us, 2.0);
  EXPECT_TRUE(m.bracket->censored);
}

TEST(Metg, UnreachableThreshold) {
  auto m = compute_metg(curve_of({{100.0, 0.4}, {10.0, 0.3}}), 0.5);
  EXPECT_EQ(m.status, MetgStatus::ThresholdUnreachable);
  EXPECT_FALSE(m.metg_us);
  EXPECT_FALSE(m.bracket);
  EXPECT_EQ(to_string(m.status), "threshold_unreachable");
}

TEST(Metg, ExactHitOnAPoint) {
  auto m = compute_metg(curve_of({{100.0, 1.0}, {10.0, 0.5}, {1.0, 0.1}}), 0.5);
  EXPECT_DOUBLE_EQ(*m.metg_us, 10.0);
}

TEST(Metg, RejectsBadInput) {
  EXPECT_THROW(compute_metg(curve_of({}), 0.5), std::invalid_argument);
  EXPECT_THROW(compute_metg(curve_of({{1.0, 1.0}}), 0.0), std::invalid_argument);
  EXPECT_THROW(compute_metg(curve_of({{1.0, 1.0}}), 1.0), std::invalid_argument);
}

TEST(Monotonize, CumulativeMaxFromSmallGranularity) {
  auto c = monotonize(curve_of({{100, 0.9}, {50, 1.0}, {10, 0.4}, {5, 0.6}, {1, 0.1}}));
  std::vector<double> e;
  for (auto& p : c.points) e.push_back(p.efficiency);
  EXPECT_EQ(e, (std::vector<double>{1.0, 1.0, 0.6, 0.6, 0.1}));
  EXPECT_EQ(c.points[2].granularity_us, 10.0);
}

TEST(Metg, NoisyCurveUsesMonotonizedCrossing) {
  auto m = compute_metg(curve_of({{100, 0.9}, {50, 0.45}, {10, 0.7}, {1, 0.2}}), 0.5);
  EXPECT_NEAR(*m.metg_us, oracle_crossing(10, 0.7, 1, 0.2, 0.5), 1e-9);
}

TEST(Metg, ThresholdMonotonicityProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<CurvePoint> pts;
    double g = 1e5;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) {
      pts.push_back({g, u(rng)});
      g /= 1.0 + 9.0 * u(rng);
    }
    auto c = curve_of(pts);
    double prev = 0.0;
    bool prev_ok = true;
    for (double th : {0.25, 0.5, 0.75}) {
      auto m = compute_metg(c, th);
      if (m.status == MetgStatus::ThresholdUnreachable) {
        prev_ok = false;
        continue;
      }
      ASSERT_TRUE(prev_ok) << "reachable threshold above an unreachable one";
      EXPECT_LE(prev, *m.metg_us * (1 + 1e-12)) << "trial " << trial << " th " << th;
      prev = *m.metg_us;
    }
  }
}

TEST(Metg, LargerThresholdNeverFoundAtSmallerGranularity) {
  auto c = curve_of({{1000, 1.0}, {100, 0.8}, {10, 0.55}, {1, 0.05}});
  const double a = *compute_metg(c, 0.25).metg_us;
  const double b = *compute_metg(c, 0.5).metg_us;
  const double d = *compute_metg(c, 0.75).metg_us;
  EXPECT_LE(a, b);
  EXPECT_LE(b, d);
  EXPECT_NEAR(d, oracle_crossing(100, 0.8, 10, 0.55, 0.75), 1e-9);
}

TEST(BuildCurve, NormalizesAndSorts) {
  std::vector<RunResult> runs = {make_run_result({0.001}, 100, 2, 1e3),
                                 make_run_result({0.1}, 100, 2, 4e5),
                                 make_run_result({0.01}, 100, 2, 3e4)};
  auto c = build_curve(runs);
  EXPECT_EQ(c.peak_perf, 4e6);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_DOUBLE_EQ(c.points[0].granularity_us, 2000.0);
  EXPECT_EQ(c.points[0].efficiency, 1.0);
  EXPECT_DOUBLE_EQ(c.points[1].efficiency, 0.75);
  EXPECT_DOUBLE_EQ(c.points[2].efficiency, 0.25);
  auto o = build_curve(runs, 8e6);
  EXPECT_EQ(o.points[0].efficiency, 0.5);
}

TEST(BuildCurve, RejectsMixedConfigurations) {
  std::vector<RunResult> runs = {make_run_result({0.1}, 100, 2, 1.0),
                                 make_run_result({0.1}, 100, 4, 1.0)};
  EXPECT_THROW(build_curve(runs), std::invalid_argument);
  runs[1] = make_run_result({0.1}, 99, 2, 1.0);
  EXPECT_THROW(build_curve(runs), std::invalid_argument);
  EXPECT_THROW(build_curve(std::span<const RunResult>{}), std::invalid_argument);
}

TEST(RunResultTest, GranularityIdentity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(1e-4, 10.0);
  for (int k = 0; k < 500; ++k) {
    const std::uint64_t tasks = 1 + rng() % 100000;
    const std::size_t cores = 1 + rng() % 64;
    auto r = make_run_result({u(rng), u(rng), u(rng)}, tasks, cores, 1.0);
    const double back = r.task_granularity_us * 1e-6 * static_cast<double>(tasks) / static_cast<double>(cores);
    EXPECT_NEAR(back, r.mean_wall_time_s, 1e-14 * r.mean_wall_time_s);
  }
}

TEST(RunResultTest, SampleStandardDeviation) {
  auto r = make_run_result({1.0, 2.0, 3.0, 4.0}, 10, 1, 5.0);
  EXPECT_DOUBLE_EQ(r.mean_wall_time_s, 2.5);
  EXPECT_DOUBLE_EQ(r.stddev_wall_time_s, std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(r.perf, 2.0);
  EXPECT_THROW(make_run_result({}, 1, 1, 1.0), std::invalid_argument);
}

TEST(Sweep, ShapeAndNormalization) {
  const auto ladder = power_of_two_ladder(1 << 16);
  ASSERT_EQ(ladder.size(), 17u);
  EXPECT_EQ(ladder.front(), 1u << 16);
  EXPECT_EQ(ladder.back(), 1u);

  const std::vector<std::uint64_t> short_ladder = {64, 16, 4, 1};
  SweepOptions opt;
  opt.timed_runs = 1;
  opt.warmup_runs = 0;
  ExecutorConfig cfg;
  auto s = sweep(cfg, stencil(4, 20), short_ladder, opt);
  ASSERT_EQ(s.runs.size(), 4u);
  ASSERT_EQ(s.curve.points.size(), 4u);
  double peak = 0.0;
  for (const auto& p : s.curve.points) {
    EXPECT_LE(p.efficiency, 1.0);
    peak = std::max(peak, p.efficiency);
  }
  EXPECT_EQ(peak, 1.0);
  for (std::size_t k = 1; k < s.curve.points.size(); ++k) {
    EXPECT_GE(s.curve.points[k - 1].granularity_us, s.curve.points[k].granularity_us);
  }
  for (const auto& r : s.runs) EXPECT_EQ(r.num_tasks, 80u);
}

TEST(Sweep, RejectsEmptyKernelAndBadLadders) {
  auto t = stencil(4, 4);
  t.kernel.kind = KernelKind::Empty;
  const std::vector<std::uint64_t> ladder = {4, 2, 1};
  try {
    sweep(ExecutorConfig{}, t, ladder);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "efficiency undefined for empty tasks");
  }
  const std::vector<std::uint64_t> flat = {4, 4, 1};
  EXPECT_THROW(sweep(ExecutorConfig{}, stencil(4, 4), flat), std::invalid_argument);
  const std::vector<std::uint64_t> up = {1, 2};
  EXPECT_THROW(sweep(ExecutorConfig{}, stencil(4, 4), up), std::invalid_argument);
}

TEST(Sweep, MultipleGraphsGetDistinctIds) {
  SweepOptions opt;
  opt.graphs = 3;
  auto req = make_request(stencil(4, 4), 7, opt);
  ASSERT_EQ(req.graphs.size(), 3u);
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(req.graphs[g].graph_id, g);
    EXPECT_EQ(req.graphs[g].kernel.iterations, 7u);
  }
}

TEST(Scaling, ConstantMetgGivesFlatLimit) {
  std::map<std::size_t, double> metg = {{1, 10.0}, {4, 10.0}, {16, 10.0}, {64, 10.0}};
  auto p = predict_strong_scaling(metg, 1000.0, 1.28);
  for (const auto& pt : p.points) {
    EXPECT_DOUBLE_EQ(pt.limit_s, 0.01);
    EXPECT_DOUBLE_EQ(pt.ideal_s, 1.28 / pt.cores);
  }
  ASSERT_TRUE(p.ideal_limit);
  EXPECT_DOUBLE_EQ(p.ideal_limit->cores, 128.0);
  EXPECT_DOUBLE_EQ(p.ideal_limit->time_s, 0.01);
}

TEST(Scaling, IntersectionInsideMeasuredRange) {
  // limit grows 10 ms -> 40 ms between 4 and 16 cores; ideal 1.0/n.
  std::map<std::size_t, double> metg = {{4, 10.0}, {16, 40.0}};
  auto p = predict_strong_scaling(metg, 1000.0, 1.0);
  ASSERT_TRUE(p.ideal_limit);
  // log-log line through (4, .01) and (16, .04) is L = n / 400; meets 1/n at n = 20.
  // 20 lies beyond the last sample so the flat tail at .04 applies: n = 25.
  EXPECT_NEAR(p.ideal_limit->cores, 25.0, 1e-9);
  auto q = predict_strong_scaling({{4, 10.0}, {64, 160.0}}, 1000.0, 1.0);
  ASSERT_TRUE(q.ideal_limit);
  EXPECT_NEAR(q.ideal_limit->cores, 20.0, 1e-9);
}

TEST(Scaling, ActualCrossingAndSeparation) {
  std::map<std::size_t, double> metg = {{1, 10.0}, {64, 10.0}};
  std::map<std::size_t, double> actual = {{1, 1.28}, {2, 0.7}, {4, 0.4}, {8, 0.04}, {16, 0.005}};
  auto p = predict_strong_scaling(metg, 1000.0, 1.28, actual);
  ASSERT_TRUE(p.actual_limit);
  EXPECT_GT(p.actual_limit->cores, 8.0);
  EXPECT_LT(p.actual_limit->cores, 16.0);
  ASSERT_TRUE(p.node_separation);
  EXPECT_GE(*p.node_separation, 1.0);
  EXPECT_GE(*p.time_separation, 1.0);
  EXPECT_NEAR(*p.node_separation, 128.0 / p.actual_limit->cores, 1e-9);
}

TEST(Scaling, RejectsBadInput) {
  EXPECT_THROW(predict_strong_scaling({}, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(predict_strong_scaling({{1, 1.0}}, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(predict_strong_scaling({{1, 1.0}}, std::map<std::size_t, double>{}, 1.0),
               std::invalid_argument);
}
