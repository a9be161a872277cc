#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "taskbench/executors/common.hpp"
#include "taskbench/executors/worker_team.hpp"

namespace taskbench {

// Dependency-counting backend. Each task carries a pending-input counter;
// the worker that drops a counter to zero enqueues the task. Without
// stealing a task always goes to the worker that owns its column; with
// stealing it stays with the releasing worker and idle workers take from
// the cold end of other queues. All graphs share one scheduler.
class DataflowExecutor {
 public:
  DataflowExecutor(const ExecutorConfig& config, std::span<const GraphPlan> plans,
                   const RunRequest& request)
      : plans_(plans),
        validate_(request.validate),
        steal_(config.steal),
        team_(std::max<std::size_t>(config.workers, 1)),
        queues_(team_.size()) {
    std::int64_t columns = 0;
    for (const auto& p : plans_) {
      base_.push_back(total_cells_);
      column_base_.push_back(columns);
      total_cells_ += p.cells();
      columns += p.width();
      total_tasks_ += p.num_tasks();
    }
    init_pending_.assign(total_cells_, 0);
    init_consumers_.assign(total_cells_, 0);
    for (std::size_t g = 0; g < plans_.size(); ++g) {
      const GraphPlan& plan = plans_[g];
      for (std::int64_t t = 0; t < plan.height(); ++t) {
        for (std::int64_t i = 0; i < plan.width(); ++i) {
          if (!plan.present(t, i)) continue;
          const std::size_t id = base_[g] + plan.cell(t, i);
          init_pending_[id] = static_cast<std::int32_t>(plan.deps(t, i).size());
          init_consumers_[id] = static_cast<std::int32_t>(plan.reverse_deps(t, i).size());
        }
      }
    }
    pending_ = std::make_unique<std::atomic<std::int32_t>[]>(total_cells_);
    consumers_ = std::make_unique<std::atomic<std::int32_t>[]>(total_cells_);
    buffers_.assign(total_cells_, nullptr);

    pools_.resize(team_.size());
    for (auto& pool : pools_) pool.free.resize(plans_.size());
    states_.reserve(team_.size());
    for (std::size_t w = 0; w < team_.size(); ++w) states_.emplace_back(plans);
  }

  [[nodiscard]] std::size_t workers() const noexcept { return team_.size(); }

  RunCounters run(RunControl& control, ExecutionLog& log) {
    for (std::size_t k = 0; k < total_cells_; ++k) {
      pending_[k].store(init_pending_[k], std::memory_order_relaxed);
      consumers_[k].store(init_consumers_[k], std::memory_order_relaxed);
      buffers_[k] = nullptr;
    }
    completed_.store(0, std::memory_order_relaxed);
    for (auto& q : queues_) q.tasks.clear();
    seed_ready_tasks();
    for (auto& s : states_) s.reset_counters();

    team_.run([&](std::size_t w) { work(w, control, log); });

    RunCounters total;
    for (const auto& s : states_) merge_counters(total, s.counters);
    return total;
  }

 private:
  struct alignas(64) Queue {
    std::mutex mu;
    std::deque<std::size_t> tasks;
  };

  // Output buffers recycled per worker and per graph. A buffer returns to
  // the pool of whichever worker retires its last consumer.
  struct Pool {
    std::vector<std::vector<std::byte*>> free;
    std::vector<std::unique_ptr<std::byte[]>> storage;
  };

  struct TaskRef {
    std::size_t graph;
    std::int64_t t;
    std::int64_t i;
  };

  TaskRef decode(std::size_t id) const noexcept {
    const auto it = std::upper_bound(base_.begin(), base_.end(), id);
    const auto g = static_cast<std::size_t>(it - base_.begin()) - 1;
    const std::size_t cell = id - base_[g];
    const auto w = static_cast<std::size_t>(plans_[g].width());
    return {g, static_cast<std::int64_t>(cell / w), static_cast<std::int64_t>(cell % w)};
  }

  std::size_t owner(std::size_t g, std::int64_t i) const noexcept {
    return static_cast<std::size_t>(column_base_[g] + i) % team_.size();
  }

  void seed_ready_tasks() {
    std::int64_t max_h = 0;
    for (const auto& p : plans_) max_h = std::max(max_h, p.height());
    for (std::int64_t t = 0; t < max_h; ++t) {
      for (std::size_t g = 0; g < plans_.size(); ++g) {
        const GraphPlan& plan = plans_[g];
        if (t >= plan.height()) continue;
        for (std::int64_t i = 0; i < plan.width(); ++i) {
          const std::size_t id = base_[g] + plan.cell(t, i);
          if (plan.present(t, i) && init_pending_[id] == 0) {
            queues_[owner(g, i)].tasks.push_back(id);
          }
        }
      }
    }
  }

  void push(std::size_t w, std::size_t id) {
    Queue& q = queues_[w];
    std::lock_guard lock(q.mu);
    q.tasks.push_back(id);
  }

  std::optional<std::size_t> pop_local(std::size_t w) {
    Queue& q = queues_[w];
    std::lock_guard lock(q.mu);
    if (q.tasks.empty()) return std::nullopt;
    const std::size_t id = q.tasks.back();
    q.tasks.pop_back();
    return id;
  }

  std::optional<std::size_t> steal(std::size_t w) {
    const std::size_t n = queues_.size();
    for (std::size_t k = 1; k < n; ++k) {
      Queue& q = queues_[(w + k) % n];
      std::lock_guard lock(q.mu);
      if (q.tasks.empty()) continue;
      const std::size_t id = q.tasks.front();
      q.tasks.pop_front();
      return id;
    }
    return std::nullopt;
  }

  std::byte* acquire_buffer(std::size_t w, std::size_t g) {
    auto& free = pools_[w].free[g];
    if (!free.empty()) {
      std::byte* b = free.back();
      free.pop_back();
      return b;
    }
    auto& slot = pools_[w].storage.emplace_back(
        std::make_unique<std::byte[]>(plans_[g].output_bytes()));
    return slot.get();
  }

  void run_task(std::size_t w, std::size_t id, RunControl& control, ExecutionLog& log) {
    WorkerState& ws = states_[w];
    const TaskRef ref = decode(id);
    const GraphPlan& plan = plans_[ref.graph];
    const std::size_t bytes = plan.output_bytes();
    const std::size_t base = base_[ref.graph];
    const auto d = plan.deps(ref.t, ref.i);

    ws.inputs.clear();
    for (std::int64_t j : d) ws.inputs.emplace_back(buffers_[base + plan.cell(ref.t - 1, j)], bytes);

    std::byte* out = acquire_buffer(w, ref.graph);
    if (auto v = execute_point(plan, ref.graph, ref.t, ref.i, ws.inputs, {out, bytes}, ws,
                               validate_)) {
      control.fail(std::move(*v));
      return;
    }
    log.record(ref.graph, plan.cell(ref.t, ref.i));
    buffers_[id] = out;

    for (std::int64_t j : plan.reverse_deps(ref.t, ref.i)) {
      const std::size_t succ = base + plan.cell(ref.t + 1, j);
      if (pending_[succ].fetch_sub(1, std::memory_order_acq_rel) == 1) {
        push(steal_ ? w : owner(ref.graph, j), succ);
      }
    }
    for (std::int64_t j : d) {
      const std::size_t pred = base + plan.cell(ref.t - 1, j);
      if (consumers_[pred].fetch_sub(1, std::memory_order_acq_rel) == 1) {
        pools_[w].free[ref.graph].push_back(buffers_[pred]);
      }
    }
    if (init_consumers_[id] == 0) pools_[w].free[ref.graph].push_back(out);

    completed_.fetch_add(1, std::memory_order_acq_rel);
    control.note_progress();
  }

  void work(std::size_t w, RunControl& control, ExecutionLog& log) {
    IdleWait idle(control);
    while (completed_.load(std::memory_order_acquire) < total_tasks_ && !control.aborted()) {
      std::optional<std::size_t> id = pop_local(w);
      if (!id && steal_) id = steal(w);
      if (id) {
        idle.reset();
        run_task(w, *id, control, log);
      } else if (idle.wait()) {
        std::ostringstream os;
        os << "dataflow: no progress within watchdog; " << completed_.load() << " of "
           << total_tasks_ << " tasks completed";
        control.fail_deadlock(os.str());
        return;
      }
    }
  }

  std::span<const GraphPlan> plans_;
  bool validate_;
  bool steal_;
  WorkerTeam team_;
  std::vector<Queue> queues_;
  std::vector<std::size_t> base_;
  std::vector<std::int64_t> column_base_;
  std::size_t total_cells_ = 0;
  std::uint64_t total_tasks_ = 0;
  std::vector<std::int32_t> init_pending_;
  std::vector<std::int32_t> init_consumers_;
  std::unique_ptr<std::atomic<std::int32_t>[]> pending_;
  std::unique_ptr<std::atomic<std::int32_t>[]> consumers_;
  std::vector<std::byte*> buffers_;
  std::atomic<std::uint64_t> completed_{0};
  std::vector<Pool> pools_;
  std::vector<WorkerState> states_;
};

}  // namespace taskbench
