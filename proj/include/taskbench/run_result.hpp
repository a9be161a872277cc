#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace taskbench {

struct RunCounters {
  std::uint64_t tasks_executed = 0;
  std::uint64_t deps_delivered = 0;
  std::uint64_t violations = 0;
  double attributed_work = 0.0;  // FLOPs or bytes actually executed
};

// Timing and derived metrics for one configuration.
struct RunResult {
  std::vector<double> wall_time_s;  // one entry per timed run
  double mean_wall_time_s = 0.0;
  double stddev_wall_time_s = 0.0;
  std::uint64_t num_tasks = 0;
  std::size_t num_cores = 1;
  double attributed_work = 0.0;
  double perf = 0.0;  // work per second
  double task_granularity_us = 0.0;
  RunCounters counters;  // from the last timed run
  // Per graph, row-major (t * width + i). Filled only when requested.
  std::vector<std::vector<std::uint32_t>> execution_counts;
};

// granularity = mean wall time * cores / tasks.
inline double task_granularity_us(double mean_wall_s, std::size_t cores, std::uint64_t tasks) {
  if (tasks == 0) return 0.0;
  return mean_wall_s * static_cast<double>(cores) / static_cast<double>(tasks) * 1e6;
}

inline RunResult make_run_result(std::vector<double> wall_times, std::uint64_t num_tasks,
                                 std::size_t num_cores, double attributed_work) {
  if (wall_times.empty()) throw std::invalid_argument("run result needs at least one timed run");
  RunResult r;
  const double n = static_cast<double>(wall_times.size());
  r.mean_wall_time_s = std::accumulate(wall_times.begin(), wall_times.end(), 0.0) / n;
  if (wall_times.size() > 1) {
    double ss = 0.0;
    for (double w : wall_times) ss += (w - r.mean_wall_time_s) * (w - r.mean_wall_time_s);
    r.stddev_wall_time_s = std::sqrt(ss / (n - 1.0));
  }
  r.wall_time_s = std::move(wall_times);
  r.num_tasks = num_tasks;
  r.num_cores = num_cores;
  r.attributed_work = attributed_work;
  r.perf = r.mean_wall_time_s > 0.0 ? attributed_work / r.mean_wall_time_s : 0.0;
  r.task_granularity_us = task_granularity_us(r.mean_wall_time_s, num_cores, num_tasks);
  return r;
}

}  // namespace taskbench
