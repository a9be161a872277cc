#pragma once

#include <algorithm>
#include <array>
#include <barrier>
#include <cstddef>
#include <span>
#include <vector>

#include "taskbench/executors/common.hpp"
#include "taskbench/executors/worker_team.hpp"

namespace taskbench {

// Bulk-synchronous backend: each timestep is a statically partitioned
// parallel loop over every column of every graph, followed by a full
// barrier. Outputs live in two shared rows per graph.
class ForkJoinExecutor {
 public:
  ForkJoinExecutor(const ExecutorConfig& config, std::span<const GraphPlan> plans,
                   const RunRequest& request)
      : plans_(plans),
        validate_(request.validate),
        team_(std::max<std::size_t>(config.workers, 1)),
        barrier_(static_cast<std::ptrdiff_t>(team_.size())) {
    states_.reserve(team_.size());
    for (std::size_t w = 0; w < team_.size(); ++w) states_.emplace_back(plans);
    for (const auto& p : plans_) {
      const auto row = static_cast<std::size_t>(p.width()) * p.output_bytes();
      rows_.push_back({std::vector<std::byte>(row), std::vector<std::byte>(row)});
      max_height_ = std::max(max_height_, p.height());
    }
  }

  [[nodiscard]] std::size_t workers() const noexcept { return team_.size(); }

  RunCounters run(RunControl& control, ExecutionLog& log) {
    for (auto& s : states_) s.reset_counters();
    team_.run([&](std::size_t w) { work(w, control, log); });
    RunCounters total;
    for (const auto& s : states_) merge_counters(total, s.counters);
    return total;
  }

 private:
  void work(std::size_t w, RunControl& control, ExecutionLog& log) {
    WorkerState& ws = states_[w];
    const std::size_t n_workers = team_.size();
    for (std::int64_t t = 0; t < max_height_; ++t) {
      std::size_t items = 0;
      for (const auto& p : plans_) {
        if (t < p.height()) items += static_cast<std::size_t>(p.width());
      }
      const std::size_t lo = w * items / n_workers;
      const std::size_t hi = (w + 1) * items / n_workers;

      std::size_t base = 0;
      for (std::size_t g = 0; g < plans_.size() && base < hi; ++g) {
        const GraphPlan& plan = plans_[g];
        if (t >= plan.height()) continue;
        const auto width = static_cast<std::size_t>(plan.width());
        const std::size_t first = std::max(lo, base);
        const std::size_t last = std::min(hi, base + width);
        for (std::size_t flat = first; flat < last && !control.aborted(); ++flat) {
          run_task(g, t, static_cast<std::int64_t>(flat - base), ws, control, log);
        }
        base += width;
      }
      barrier_.arrive_and_wait();
      // Every worker observes the same flag here, so they leave together.
      if (control.aborted()) return;
    }
  }

  void run_task(std::size_t g, std::int64_t t, std::int64_t i, WorkerState& ws,
                RunControl& control, ExecutionLog& log) {
    const GraphPlan& plan = plans_[g];
    if (!plan.present(t, i)) return;
    const std::size_t bytes = plan.output_bytes();
    auto& cur = rows_[g][t % 2];
    const auto& prev = rows_[g][(t + 1) % 2];
    ws.inputs.clear();
    for (std::int64_t j : plan.deps(t, i)) {
      ws.inputs.emplace_back(prev.data() + static_cast<std::size_t>(j) * bytes, bytes);
    }
    std::span<std::byte> out(cur.data() + static_cast<std::size_t>(i) * bytes, bytes);
    if (auto v = execute_point(plan, g, t, i, ws.inputs, out, ws, validate_)) {
      control.fail(std::move(*v));
      return;
    }
    log.record(g, plan.cell(t, i));
  }

  std::span<const GraphPlan> plans_;
  bool validate_;
  WorkerTeam team_;
  std::barrier<> barrier_;
  std::vector<WorkerState> states_;
  std::vector<std::array<std::vector<std::byte>, 2>> rows_;
  std::int64_t max_height_ = 0;
};

}  // namespace taskbench
