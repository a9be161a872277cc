#pragma once

#include <chrono>
#include <cstddef>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "taskbench/executors/common.hpp"
#include "taskbench/executors/csp.hpp"
#include "taskbench/executors/dataflow.hpp"
#include "taskbench/executors/fork_join.hpp"
#include "taskbench/executors/serial.hpp"
#include "taskbench/run_result.hpp"

namespace taskbench {

inline std::size_t available_cores() noexcept {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

namespace detail {

template <typename Backend>
RunResult timed_runs(const ExecutorConfig& config, const std::vector<GraphPlan>& plans,
                     const RunRequest& request) {
  Backend backend(config, plans, request);
  ExecutionLog log(plans, request.count_executions);
  std::vector<double> times;
  times.reserve(request.timed_runs);
  RunCounters counters;
  for (std::size_t r = 0; r < request.warmup_runs + request.timed_runs; ++r) {
    log.reset();
    RunControl control(config.watchdog);
    const auto start = std::chrono::steady_clock::now();
    counters = backend.run(control, log);
    const auto stop = std::chrono::steady_clock::now();
    control.rethrow();
    if (r >= request.warmup_runs) times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::uint64_t tasks = 0;
  double work = 0.0;
  for (const auto& p : plans) {
    tasks += p.num_tasks();
    work += p.attributed_work();
  }
  RunResult result = make_run_result(std::move(times), tasks, backend.workers(), work);
  result.counters = counters;
  if (log.enabled()) result.execution_counts = log.snapshot();
  return result;
}

}  // namespace detail

// Runs every graph of `request` to completion on the configured backend,
// `warmup_runs` untimed then `timed_runs` timed. Throws ValidationError on a
// payload mismatch and DeadlockError when the watchdog fires.
inline RunResult execute(const ExecutorConfig& config, const RunRequest& request) {
  if (request.graphs.empty()) throw std::invalid_argument("run request needs at least one graph");
  if (request.timed_runs == 0) throw std::invalid_argument("run request needs at least one timed run");
  if (config.workers == 0) throw std::invalid_argument("executor needs at least one worker");
  if (config.workers > available_cores()) {
    static std::once_flag warned;
    std::call_once(warned, [&] {
      std::clog << "taskbench: warning: " << config.workers << " workers exceed "
                << available_cores() << " available cores\n";
    });
  }
  std::vector<GraphPlan> plans;
  plans.reserve(request.graphs.size());
  for (const auto& g : request.graphs) plans.emplace_back(g);

  switch (config.kind) {
    case ExecutorKind::Serial: return detail::timed_runs<SerialExecutor>(config, plans, request);
    case ExecutorKind::ForkJoin: return detail::timed_runs<ForkJoinExecutor>(config, plans, request);
    case ExecutorKind::Csp: return detail::timed_runs<CspExecutor>(config, plans, request);
    case ExecutorKind::Dataflow: return detail::timed_runs<DataflowExecutor>(config, plans, request);
  }
  throw std::invalid_argument("unknown executor kind");
}

}  // namespace taskbench
