#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "taskbench/executor.hpp"
#include "taskbench/graph.hpp"
#include "taskbench/kernels.hpp"
#include "taskbench/run_result.hpp"

namespace taskbench {

// ---------------------------------------------------------------------------
// Efficiency curves
// ---------------------------------------------------------------------------

struct CurvePoint {
  double granularity_us = 0.0;
  double efficiency = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Points sorted by granularity, largest first.
struct EfficiencyCurve {
  std::vector<CurvePoint> points;
  double peak_perf = 0.0;
};

// Normalises a set of runs of one configuration against the best observed
// performance (or `peak_override`, for comparisons across sweeps). All runs
// must share task count and worker count: the curve is measured in place.
inline EfficiencyCurve build_curve(std::span<const RunResult> runs,
                                   std::optional<double> peak_override = std::nullopt) {
  if (runs.empty()) throw std::invalid_argument("efficiency curve needs at least one run");
  for (const auto& r : runs) {
    if (r.num_tasks != runs.front().num_tasks || r.num_cores != runs.front().num_cores) {
      throw std::invalid_argument(
          "efficiency curve mixes configurations: task and worker counts must match");
    }
  }
  EfficiencyCurve curve;
  if (peak_override) {
    curve.peak_perf = *peak_override;
  } else {
    for (const auto& r : runs) curve.peak_perf = std::max(curve.peak_perf, r.perf);
  }
  if (!(curve.peak_perf > 0.0)) throw std::invalid_argument("efficiency undefined: zero peak performance");
  for (const auto& r : runs) curve.points.push_back({r.task_granularity_us, r.perf / curve.peak_perf});
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) {
                     return a.granularity_us > b.granularity_us;
                   });
  return curve;
}

// Each point takes the best efficiency seen at its granularity or any
// smaller one, so efficiency never rises as granularity shrinks.
inline EfficiencyCurve monotonize(EfficiencyCurve curve) {
  double best = 0.0;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    best = std::max(best, it->efficiency);
    it->efficiency = best;
  }
  return curve;
}

// ---------------------------------------------------------------------------
// METG extraction
// ---------------------------------------------------------------------------

enum class MetgStatus { Ok, ThresholdUnreachable };

inline std::string_view to_string(MetgStatus s) noexcept {
  return s == MetgStatus::Ok ? "ok" : "threshold_unreachable";
}

struct MetgBracket {
  CurvePoint above;       // last point at or over the threshold
  CurvePoint below;       // first point under it (== above when censored)
  bool censored = false;  // the curve never dropped below the threshold
};

struct MetgResult {
  double threshold = 0.5;
  std::optional<double> metg_us;  // set iff status == Ok
  std::optional<MetgBracket> bracket;
  MetgStatus status = MetgStatus::ThresholdUnreachable;
};

// Smallest granularity sustaining `threshold` efficiency. The crossing is
// interpolated linearly in (log granularity, efficiency) on the monotonised
// curve.
inline MetgResult compute_metg(const EfficiencyCurve& curve, double threshold) {
  if (curve.points.empty()) throw std::invalid_argument("compute_metg: empty curve");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("compute_metg: threshold must lie in (0, 1)");
  }
  const EfficiencyCurve mono = monotonize(curve);
  const auto& pts = mono.points;
  MetgResult result;
  result.threshold = threshold;
  if (pts.front().efficiency < threshold) return result;

  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const CurvePoint& hi = pts[k];
    const CurvePoint& lo = pts[k + 1];
    if (hi.efficiency >= threshold && lo.efficiency < threshold) {
      const double x_hi = std::log10(hi.granularity_us);
      const double x_lo = std::log10(lo.granularity_us);
      const double frac = (threshold - hi.efficiency) / (lo.efficiency - hi.efficiency);
      result.metg_us = std::pow(10.0, x_hi + frac * (x_lo - x_hi));
      result.bracket = MetgBracket{hi, lo, false};
      result.status = MetgStatus::Ok;
      return result;
    }
  }
  result.metg_us = pts.back().granularity_us;
  result.bracket = MetgBracket{pts.back(), pts.back(), true};
  result.status = MetgStatus::Ok;
  return result;
}

// ---------------------------------------------------------------------------
// Problem-size sweeps
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::size_t graphs = 1;  // concurrent copies of the template
  bool validate = true;
  std::size_t warmup_runs = 1;
  std::size_t timed_runs = 5;
  std::optional<double> peak_override;
};

struct SweepResult {
  std::vector<std::uint64_t> iterations;  // ladder, parallel to runs
  std::vector<RunResult> runs;
  EfficiencyCurve curve;
};

inline RunRequest make_request(const TaskGraphSpec& tmpl, std::uint64_t iterations,
                               const SweepOptions& opt) {
  RunRequest req;
  req.validate = opt.validate;
  req.warmup_runs = opt.warmup_runs;
  req.timed_runs = opt.timed_runs;
  for (std::size_t g = 0; g < std::max<std::size_t>(opt.graphs, 1); ++g) {
    TaskGraphSpec spec = tmpl;
    spec.graph_id = tmpl.graph_id + g;
    spec.kernel.iterations = iterations;
    req.graphs.push_back(spec);
  }
  return req;
}

// Shrinks the problem along `ladder` on a fixed configuration and builds the
// efficiency-vs-granularity curve.
inline SweepResult sweep(const ExecutorConfig& config, const TaskGraphSpec& tmpl,
                         std::span<const std::uint64_t> ladder, const SweepOptions& opt = {}) {
  if (tmpl.kernel.kind == KernelKind::Empty) {
    throw std::invalid_argument("efficiency undefined for empty tasks");
  }
  if (ladder.empty()) throw std::invalid_argument("sweep ladder is empty");
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    if (ladder[k] >= ladder[k - 1]) throw std::invalid_argument("sweep ladder must be strictly decreasing");
  }
  SweepResult out;
  for (std::uint64_t iters : ladder) {
    out.iterations.push_back(iters);
    out.runs.push_back(execute(config, make_request(tmpl, iters, opt)));
  }
  out.curve = build_curve(out.runs, opt.peak_override);
  return out;
}

// Powers of two from `top` down to 1.
inline std::vector<std::uint64_t> power_of_two_ladder(std::uint64_t top) {
  std::vector<std::uint64_t> ladder;
  std::uint64_t v = std::bit_floor(std::max<std::uint64_t>(top, 1));
  for (; v >= 1; v /= 2) ladder.push_back(v);
  return ladder;
}

// First power-of-two iteration count whose single-task kernel time reaches
// `min_task_seconds` on this machine.
inline std::uint64_t calibrate_top_iterations(const KernelSpec& kernel,
                                              double min_task_seconds = 5e-3,
                                              std::uint64_t cap = std::uint64_t{1} << 40) {
  if (kernel.kind == KernelKind::Empty) throw std::invalid_argument("efficiency undefined for empty tasks");
  ComputeLanes lanes{};
  std::vector<std::byte> scratch(kernel.kind == KernelKind::Memory ? kernel.scratch_bytes : 0);
  std::uint64_t cursor = 0;
  for (std::uint64_t iters = 1; iters < cap; iters *= 2) {
    const auto start = std::chrono::steady_clock::now();
    if (kernel.kind == KernelKind::Compute) {
      reset_lanes(lanes);
      compute_kernel(iters, lanes);
    } else {
      cursor = memory_kernel(iters, kernel.span_bytes, scratch, cursor);
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    volatile double keep = lanes[0];
    (void)keep;
    if (s >= min_task_seconds) return iters;
  }
  return cap;
}

// ---------------------------------------------------------------------------
// Strong-scaling prediction
// ---------------------------------------------------------------------------

struct ScalingPoint {
  double cores = 0.0;
  double limit_s = 0.0;  // metg * tasks per core
  double ideal_s = 0.0;  // t1 / cores
  std::optional<double> actual_s;
};

struct ScalingIntersection {
  double cores = 0.0;
  double time_s = 0.0;
};

struct ScalingPrediction {
  std::vector<ScalingPoint> points;
  std::optional<ScalingIntersection> ideal_limit;
  std::optional<ScalingIntersection> actual_limit;
  std::optional<double> node_separation;  // ratio >= 1
  std::optional<double> time_separation;
};

namespace detail {

// Piecewise linear in log-log space between samples, flat outside them.
inline double loglog_eval(const std::map<double, double>& samples, double x) {
  if (x <= samples.begin()->first) return samples.begin()->second;
  if (x >= samples.rbegin()->first) return samples.rbegin()->second;
  auto hi = samples.lower_bound(x);
  if (hi->first == x) return hi->second;
  auto lo = std::prev(hi);
  const double f = (std::log(x) - std::log(lo->first)) / (std::log(hi->first) - std::log(lo->first));
  return std::exp(std::log(lo->second) + f * (std::log(hi->second) - std::log(lo->second)));
}

inline double ratio_ge1(double a, double b) { return a > b ? a / b : b / a; }

}  // namespace detail

// limit(n) = METG(n) * tasks_per_core(n); ideal(n) = t1 / n. Reports where
// the ideal curve meets the limit and, given measured timings, where the
// measurements do.
inline ScalingPrediction predict_strong_scaling(const std::map<std::size_t, double>& metg_us,
                                                const std::map<std::size_t, double>& tasks_per_core,
                                                double t1_s,
                                                const std::map<std::size_t, double>& actual_s = {}) {
  if (metg_us.empty()) throw std::invalid_argument("scaling prediction needs METG measurements");
  if (!(t1_s > 0.0)) throw std::invalid_argument("scaling prediction needs a positive one-worker time");
  std::map<double, double> limit;
  for (const auto& [n, m] : metg_us) {
    auto tpc = tasks_per_core.find(n);
    if (tpc == tasks_per_core.end()) {
      throw std::invalid_argument("tasks_per_core missing for " + std::to_string(n) + " cores");
    }
    limit[static_cast<double>(n)] = m * tpc->second / 1e6;
  }

  ScalingPrediction out;
  std::map<double, double> actual;
  for (const auto& [n, s] : actual_s) actual[static_cast<double>(n)] = s;
  std::map<double, bool> ns;
  for (const auto& [n, v] : limit) ns[n] = true;
  for (const auto& [n, v] : actual) ns[n] = true;
  for (const auto& [n, unused] : ns) {
    ScalingPoint p;
    p.cores = n;
    p.limit_s = detail::loglog_eval(limit, n);
    p.ideal_s = t1_s / n;
    if (auto it = actual.find(n); it != actual.end()) p.actual_s = it->second;
    out.points.push_back(p);
  }

  // Ideal meets limit. Flat pieces are solved directly (n = t1 / L) so a
  // constant limit gives an exact answer.
  {
    const double first_n = limit.begin()->first;
    const double first_l = limit.begin()->second;
    if (t1_s / first_l <= first_n) {
      out.ideal_limit = ScalingIntersection{t1_s / first_l, first_l};
    }
    for (auto it = limit.begin(); !out.ideal_limit && std::next(it) != limit.end(); ++it) {
      auto nx = std::next(it);
      const double x0 = std::log(it->first), x1 = std::log(nx->first);
      const double h0 = std::log(t1_s) - x0 - std::log(it->second);
      const double h1 = std::log(t1_s) - x1 - std::log(nx->second);
      if (h0 > 0.0 && h1 <= 0.0) {
        if (it->second == nx->second) {
          out.ideal_limit = ScalingIntersection{t1_s / it->second, it->second};
          break;
        }
        const double x = x0 + h0 / (h0 - h1) * (x1 - x0);
        const double n = std::exp(x);
        out.ideal_limit = ScalingIntersection{n, detail::loglog_eval(limit, n)};
      }
    }
    const double last_n = limit.rbegin()->first;
    const double last_l = limit.rbegin()->second;
    if (!out.ideal_limit && t1_s / last_l >= last_n) {
      out.ideal_limit = ScalingIntersection{t1_s / last_l, last_l};
    }
  }

  // Measured curve meets limit, within the measured range.
  if (actual.size() >= 1) {
    std::vector<double> xs;
    for (const auto& [n, s] : actual) xs.push_back(n);
    for (std::size_t k = 0; k < xs.size() && !out.actual_limit; ++k) {
      const double g = std::log(actual[xs[k]]) - std::log(detail::loglog_eval(limit, xs[k]));
      if (g <= 0.0) {
        if (k == 0) {
          out.actual_limit = ScalingIntersection{xs[0], detail::loglog_eval(limit, xs[0])};
          break;
        }
        const double gp = std::log(actual[xs[k - 1]]) - std::log(detail::loglog_eval(limit, xs[k - 1]));
        const double x0 = std::log(xs[k - 1]), x1 = std::log(xs[k]);
        const double n = std::exp(x0 + gp / (gp - g) * (x1 - x0));
        out.actual_limit = ScalingIntersection{n, detail::loglog_eval(limit, n)};
      }
    }
  }

  if (out.ideal_limit && out.actual_limit) {
    out.node_separation = detail::ratio_ge1(out.ideal_limit->cores, out.actual_limit->cores);
    out.time_separation = detail::ratio_ge1(out.ideal_limit->time_s, out.actual_limit->time_s);
  }
  return out;
}

inline ScalingPrediction predict_strong_scaling(const std::map<std::size_t, double>& metg_us,
                                                double tasks_per_core, double t1_s,
                                                const std::map<std::size_t, double>& actual_s = {}) {
  std::map<std::size_t, double> tpc;
  for (const auto& [n, m] : metg_us) tpc[n] = tasks_per_core;
  return predict_strong_scaling(metg_us, tpc, t1_s, actual_s);
}

}  // namespace taskbench
