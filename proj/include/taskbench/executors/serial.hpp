#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "taskbench/executors/common.hpp"

namespace taskbench {

// Single worker, timestep-major then graph then column order. Reference
// backend for correctness and for single-core overhead floors.
class SerialExecutor {
 public:
  SerialExecutor(const ExecutorConfig& /*config*/, std::span<const GraphPlan> plans,
                 const RunRequest& request)
      : plans_(plans), validate_(request.validate), state_(plans) {
    for (const auto& p : plans_) {
      const auto row = static_cast<std::size_t>(p.width()) * p.output_bytes();
      rows_.push_back({std::vector<std::byte>(row), std::vector<std::byte>(row)});
      max_height_ = std::max(max_height_, p.height());
    }
  }

  [[nodiscard]] std::size_t workers() const noexcept { return 1; }

  RunCounters run(RunControl& control, ExecutionLog& log) {
    state_.reset_counters();
    for (std::int64_t t = 0; t < max_height_; ++t) {
      for (std::size_t g = 0; g < plans_.size(); ++g) {
        const GraphPlan& plan = plans_[g];
        if (t >= plan.height()) continue;
        const std::size_t bytes = plan.output_bytes();
        auto& cur = rows_[g][t % 2];
        const auto& prev = rows_[g][(t + 1) % 2];
        for (std::int64_t i = 0; i < plan.width(); ++i) {
          if (!plan.present(t, i)) continue;
          state_.inputs.clear();
          for (std::int64_t j : plan.deps(t, i)) {
            state_.inputs.emplace_back(prev.data() + static_cast<std::size_t>(j) * bytes, bytes);
          }
          std::span<std::byte> out(cur.data() + static_cast<std::size_t>(i) * bytes, bytes);
          if (auto v = execute_point(plan, g, t, i, state_.inputs, out, state_, validate_)) {
            control.fail(std::move(*v));
            return state_.counters;
          }
          log.record(g, plan.cell(t, i));
        }
      }
    }
    return state_.counters;
  }

 private:
  std::span<const GraphPlan> plans_;
  bool validate_;
  WorkerState state_;
  std::vector<std::array<std::vector<std::byte>, 2>> rows_;
  std::int64_t max_height_ = 0;
};

}  // namespace taskbench
