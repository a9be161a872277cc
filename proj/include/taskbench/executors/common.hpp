#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "taskbench/graph.hpp"
#include "taskbench/kernels.hpp"
#include "taskbench/run_result.hpp"
#include "taskbench/validation.hpp"

namespace taskbench {

enum class ExecutorKind { Serial, ForkJoin, Csp, Dataflow };

inline constexpr ExecutorKind kAllExecutors[] = {ExecutorKind::Serial, ExecutorKind::ForkJoin,
                                                 ExecutorKind::Csp, ExecutorKind::Dataflow};

inline std::string_view to_string(ExecutorKind kind) noexcept {
  switch (kind) {
    case ExecutorKind::Serial: return "serial";
    case ExecutorKind::ForkJoin: return "forkjoin";
    case ExecutorKind::Csp: return "csp";
    case ExecutorKind::Dataflow: return "dataflow";
  }
  return "?";
}

inline std::optional<ExecutorKind> parse_executor_kind(std::string_view name) noexcept {
  for (ExecutorKind k : kAllExecutors) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct ExecutorConfig {
  ExecutorKind kind = ExecutorKind::Serial;
  std::size_t workers = 1;
  bool steal = true;                 // dataflow only
  std::size_t channel_capacity = 4;  // csp only; 0 = unbounded
  std::chrono::milliseconds watchdog{30000};
};

struct RunRequest {
  std::vector<TaskGraphSpec> graphs;  // executed concurrently
  bool validate = true;
  std::size_t warmup_runs = 1;
  std::size_t timed_runs = 5;
  bool count_executions = false;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(Violation v)
      : std::runtime_error("validation failed: " + v.describe()), violation_(std::move(v)) {}
  [[nodiscard]] const Violation& violation() const noexcept { return violation_; }

 private:
  Violation violation_;
};

class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// GraphPlan: dependence tables materialised once per execute() call
// ---------------------------------------------------------------------------

class GraphPlan {
 public:
  explicit GraphPlan(const TaskGraphSpec& spec) : spec_(spec) {
    validate(spec_);
    const auto cells = static_cast<std::size_t>(spec_.width * spec_.height);
    present_.assign(cells, 0);
    iterations_.assign(cells, 0);
    dep_offsets_.assign(cells + 1, 0);
    rdep_offsets_.assign(cells + 1, 0);
    const double per_iter = work_per_iteration(spec_.kernel);
    for (std::int64_t t = 0; t < spec_.height; ++t) {
      for (std::int64_t i = 0; i < spec_.width; ++i) {
        const std::size_t c = cell(t, i);
        if (contains_point(spec_, {t, i})) {
          present_[c] = 1;
          ++tasks_;
          iterations_[c] = effective_iterations(spec_.kernel, spec_.graph_id, t, i);
          work_ += per_iter * static_cast<double>(iterations_[c]);
          for (std::int64_t j : taskbench::deps(spec_, {t, i})) dep_cols_.push_back(j);
          for (std::int64_t j : taskbench::reverse_deps(spec_, {t, i})) rdep_cols_.push_back(j);
        }
        dep_offsets_[c + 1] = dep_cols_.size();
        rdep_offsets_[c + 1] = rdep_cols_.size();
      }
    }
  }

  [[nodiscard]] const TaskGraphSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::int64_t width() const noexcept { return spec_.width; }
  [[nodiscard]] std::int64_t height() const noexcept { return spec_.height; }
  [[nodiscard]] std::size_t output_bytes() const noexcept { return spec_.output_bytes; }
  [[nodiscard]] std::uint64_t num_tasks() const noexcept { return tasks_; }
  [[nodiscard]] std::uint64_t num_deps() const noexcept { return dep_cols_.size(); }
  [[nodiscard]] double attributed_work() const noexcept { return work_; }
  [[nodiscard]] std::size_t cells() const noexcept { return present_.size(); }

  [[nodiscard]] std::size_t cell(std::int64_t t, std::int64_t i) const noexcept {
    return static_cast<std::size_t>(t * spec_.width + i);
  }
  [[nodiscard]] bool present(std::int64_t t, std::int64_t i) const noexcept {
    return present_[cell(t, i)] != 0;
  }
  [[nodiscard]] std::uint64_t iterations(std::int64_t t, std::int64_t i) const noexcept {
    return iterations_[cell(t, i)];
  }
  [[nodiscard]] std::span<const std::int64_t> deps(std::int64_t t, std::int64_t i) const noexcept {
    const std::size_t c = cell(t, i);
    return {dep_cols_.data() + dep_offsets_[c], dep_offsets_[c + 1] - dep_offsets_[c]};
  }
  [[nodiscard]] std::span<const std::int64_t> reverse_deps(std::int64_t t,
                                                           std::int64_t i) const noexcept {
    const std::size_t c = cell(t, i);
    return {rdep_cols_.data() + rdep_offsets_[c], rdep_offsets_[c + 1] - rdep_offsets_[c]};
  }
  // Offset of (t, i)'s first dependency in the flattened tables; lets
  // executors keep side arrays parallel to deps().
  [[nodiscard]] std::size_t dep_base(std::int64_t t, std::int64_t i) const noexcept {
    return dep_offsets_[cell(t, i)];
  }
  [[nodiscard]] std::size_t rdep_base(std::int64_t t, std::int64_t i) const noexcept {
    return rdep_offsets_[cell(t, i)];
  }
  [[nodiscard]] std::size_t num_reverse_edges() const noexcept { return rdep_cols_.size(); }

 private:
  TaskGraphSpec spec_;
  std::vector<std::uint8_t> present_;
  std::vector<std::uint64_t> iterations_;
  std::vector<std::size_t> dep_offsets_;
  std::vector<std::int64_t> dep_cols_;
  std::vector<std::size_t> rdep_offsets_;
  std::vector<std::int64_t> rdep_cols_;
  std::uint64_t tasks_ = 0;
  double work_ = 0.0;
};

// ---------------------------------------------------------------------------
// Per-worker kernel state
// ---------------------------------------------------------------------------

struct WorkerState {
  ComputeLanes lanes{};
  std::vector<std::vector<std::byte>> scratch;  // one per graph (memory kernel)
  std::vector<std::uint64_t> cursor;
  std::vector<std::span<const std::byte>> inputs;  // reused gather buffer
  RunCounters counters;
  double sink = 0.0;

  explicit WorkerState(std::span<const GraphPlan> plans) {
    scratch.resize(plans.size());
    cursor.assign(plans.size(), 0);
    for (std::size_t g = 0; g < plans.size(); ++g) {
      const KernelSpec& k = plans[g].spec().kernel;
      if (k.kind == KernelKind::Memory) scratch[g].assign(k.scratch_bytes, std::byte{0});
    }
  }

  void reset_counters() noexcept { counters = {}; }
};

// Shared abort state for one run.
class RunControl {
 public:
  explicit RunControl(std::chrono::milliseconds watchdog) : watchdog_(watchdog) {}

  [[nodiscard]] bool aborted() const noexcept { return abort_.load(std::memory_order_relaxed); }

  void fail(Violation v) {
    std::lock_guard lock(mu_);
    if (!violation_ && !deadlock_) violation_ = std::move(v);
    abort_.store(true, std::memory_order_relaxed);
  }

  void fail_deadlock(std::string diagnostic) {
    std::lock_guard lock(mu_);
    if (!violation_ && !deadlock_) deadlock_ = std::move(diagnostic);
    abort_.store(true, std::memory_order_relaxed);
  }

  void note_progress() noexcept { progress_.fetch_add(1, std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t progress() const noexcept {
    return progress_.load(std::memory_order_relaxed);
  }
  [[nodiscard]] std::chrono::milliseconds watchdog() const noexcept { return watchdog_; }

  // Throws the recorded failure, if any.
  void rethrow() const {
    std::lock_guard lock(mu_);
    if (violation_) throw ValidationError(*violation_);
    if (deadlock_) throw DeadlockError(*deadlock_);
  }

 private:
  std::chrono::milliseconds watchdog_;
  std::atomic<bool> abort_{false};
  std::atomic<std::uint64_t> progress_{0};
  mutable std::mutex mu_;
  std::optional<Violation> violation_;
  std::optional<std::string> deadlock_;
};

// Backoff for idle workers plus the no-progress watchdog.
class IdleWait {
 public:
  explicit IdleWait(const RunControl& control) : control_(control) {}

  void reset() noexcept { spins_ = 0; }

  // Returns true once the run has made no progress for the watchdog interval.
  bool wait() {
    ++spins_;
    if (spins_ < 64) return false;
    std::this_thread::yield();
    if ((spins_ & 255) != 0) return false;
    const auto now = std::chrono::steady_clock::now();
    const std::uint64_t p = control_.progress();
    if (p != last_progress_ || !stamped_) {
      last_progress_ = p;
      since_ = now;
      stamped_ = true;
      return false;
    }
    return now - since_ > control_.watchdog();
  }

 private:
  const RunControl& control_;
  std::uint64_t spins_ = 0;
  std::uint64_t last_progress_ = 0;
  std::chrono::steady_clock::time_point since_{};
  bool stamped_ = false;
};

// Runs the body of task (t, i): checks inputs, runs the kernel, writes the
// output tuple. Returns the violation instead of throwing so worker threads
// can hand it to RunControl.
inline std::optional<Violation> execute_point(const GraphPlan& plan, std::size_t graph_index,
                                              std::int64_t t, std::int64_t i,
                                              std::span<const std::span<const std::byte>> inputs,
                                              std::span<std::byte> output, WorkerState& ws,
                                              bool validate) {
  if (validate) {
    const auto expected = plan.deps(t, i);
    if (!detail::inputs_match({t, i}, expected, inputs, plan.output_bytes())) [[unlikely]] {
      if (auto v = detail::diagnose_inputs({t, i}, expected, inputs, plan.output_bytes())) {
        ++ws.counters.violations;
        return v;
      }
    }
  }
  const KernelSpec& k = plan.spec().kernel;
  const std::uint64_t iters = plan.iterations(t, i);
  switch (k.kind) {
    case KernelKind::Compute:
      reset_lanes(ws.lanes);
      compute_kernel(iters, ws.lanes);
      ws.sink += ws.lanes[static_cast<std::size_t>(i) % kComputeLanes];
      break;
    case KernelKind::Memory:
      ws.cursor[graph_index] =
          memory_kernel(iters, k.span_bytes, ws.scratch[graph_index], ws.cursor[graph_index]);
      break;
    case KernelKind::Empty:
      break;
  }
  write_output({t, i}, output);
  ++ws.counters.tasks_executed;
  ws.counters.deps_delivered += inputs.size();
  ws.counters.attributed_work += work_per_iteration(k) * static_cast<double>(iters);
  return std::nullopt;
}

inline void merge_counters(RunCounters& into, const RunCounters& from) noexcept {
  into.tasks_executed += from.tasks_executed;
  into.deps_delivered += from.deps_delivered;
  into.violations += from.violations;
  into.attributed_work += from.attributed_work;
}

// Optional exactly-once bookkeeping.
class ExecutionLog {
 public:
  ExecutionLog(std::span<const GraphPlan> plans, bool enabled) : enabled_(enabled) {
    if (!enabled_) return;
    for (const auto& p : plans) counts_.emplace_back(std::make_unique<std::atomic<std::uint32_t>[]>(p.cells()));
    sizes_.reserve(plans.size());
    for (const auto& p : plans) sizes_.push_back(p.cells());
  }

  void reset() noexcept {
    for (std::size_t g = 0; g < counts_.size(); ++g) {
      for (std::size_t c = 0; c < sizes_[g]; ++c) counts_[g][c].store(0, std::memory_order_relaxed);
    }
  }

  void record(std::size_t graph, std::size_t cell) noexcept {
    if (enabled_) counts_[graph][cell].fetch_add(1, std::memory_order_relaxed);
  }

  [[nodiscard]] std::vector<std::vector<std::uint32_t>> snapshot() const {
    std::vector<std::vector<std::uint32_t>> out;
    for (std::size_t g = 0; g < counts_.size(); ++g) {
      auto& row = out.emplace_back(sizes_[g]);
      for (std::size_t c = 0; c < sizes_[g]; ++c) row[c] = counts_[g][c].load();
    }
    return out;
  }

  [[nodiscard]] bool enabled() const noexcept { return enabled_; }

 private:
  bool enabled_;
  std::vector<std::unique_ptr<std::atomic<std::uint32_t>[]>> counts_;
  std::vector<std::size_t> sizes_;
};

}  // namespace taskbench
