#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "taskbench/executors/channel.hpp"
#include "taskbench/executors/common.hpp"
#include "taskbench/executors/worker_team.hpp"

namespace taskbench {

// Message-passing backend. Every column of every graph is a logical process
// that, per timestep, receives one message from each dependency, runs the
// task, then sends its output to each successor over a bounded per-edge
// channel. Processes are mapped round-robin onto worker threads and advanced
// as non-blocking state machines, so widths larger than the worker count
// cannot wedge a thread on a receive.
class CspExecutor {
 public:
  CspExecutor(const ExecutorConfig& config, std::span<const GraphPlan> plans,
              const RunRequest& request)
      : plans_(plans),
        validate_(request.validate),
        team_(std::max<std::size_t>(config.workers, 1)) {
    recv_.resize(plans_.size());
    send_.resize(plans_.size());
    for (std::size_t g = 0; g < plans_.size(); ++g) build_edges(g, config.channel_capacity);

    for (std::size_t g = 0; g < plans_.size(); ++g) {
      for (std::int64_t i = 0; i < plans_[g].width(); ++i) {
        Process p;
        p.graph = g;
        p.column = i;
        p.output.resize(plans_[g].output_bytes());
        processes_.push_back(std::move(p));
      }
    }
    owned_.resize(team_.size());
    for (std::size_t p = 0; p < processes_.size(); ++p) owned_[p % team_.size()].push_back(p);
    states_.reserve(team_.size());
    for (std::size_t w = 0; w < team_.size(); ++w) states_.emplace_back(plans);
  }

  [[nodiscard]] std::size_t workers() const noexcept { return team_.size(); }
  [[nodiscard]] std::size_t num_channels() const noexcept { return channels_.size(); }

  RunCounters run(RunControl& control, ExecutionLog& log) {
    for (auto& c : channels_) c->reset();
    for (auto& p : processes_) {
      p.step = 0;
      p.sending = false;
      p.next_send = 0;
    }
    for (auto& s : states_) s.reset_counters();
    team_.run([&](std::size_t w) { work(w, control, log); });
    RunCounters total;
    for (const auto& s : states_) merge_counters(total, s.counters);
    return total;
  }

 private:
  struct Process {
    std::size_t graph = 0;
    std::int64_t column = 0;
    std::int64_t step = 0;
    bool sending = false;
    std::size_t next_send = 0;
    std::vector<std::byte> output;
  };

  void build_edges(std::size_t g, std::size_t capacity) {
    const GraphPlan& plan = plans_[g];
    // Unbounded mode: no edge ever carries more than one message per step.
    const std::size_t cap = capacity == 0 ? static_cast<std::size_t>(plan.height()) : capacity;
    std::unordered_map<std::uint64_t, std::size_t> index;
    auto edge = [&](std::int64_t src, std::int64_t dst) {
      const std::uint64_t key =
          static_cast<std::uint64_t>(src) * static_cast<std::uint64_t>(plan.width()) +
          static_cast<std::uint64_t>(dst);
      auto [it, inserted] = index.try_emplace(key, channels_.size());
      if (inserted) channels_.push_back(std::make_unique<Channel>(cap, plan.output_bytes()));
      return it->second;
    };
    recv_[g].assign(plan.num_deps(), 0);
    send_[g].assign(plan.num_reverse_edges(), 0);
    for (std::int64_t t = 0; t < plan.height(); ++t) {
      for (std::int64_t i = 0; i < plan.width(); ++i) {
        if (!plan.present(t, i)) continue;
        auto d = plan.deps(t, i);
        for (std::size_t k = 0; k < d.size(); ++k) recv_[g][plan.dep_base(t, i) + k] = edge(d[k], i);
        auto r = plan.reverse_deps(t, i);
        for (std::size_t k = 0; k < r.size(); ++k) send_[g][plan.rdep_base(t, i) + k] = edge(i, r[k]);
      }
    }
  }

  // Moves one process forward as far as it can without blocking.
  bool advance(Process& p, WorkerState& ws, RunControl& control, ExecutionLog& log) {
    const GraphPlan& plan = plans_[p.graph];
    bool progressed = false;
    while (p.step < plan.height()) {
      const std::int64_t t = p.step;
      const std::int64_t i = p.column;
      if (!plan.present(t, i)) {
        ++p.step;
        progressed = true;
        continue;
      }
      if (!p.sending) {
        const auto d = plan.deps(t, i);
        const std::size_t rbase = plan.dep_base(t, i);
        for (std::size_t k = 0; k < d.size(); ++k) {
          if (channels_[recv_[p.graph][rbase + k]]->empty()) return progressed;
        }
        ws.inputs.clear();
        for (std::size_t k = 0; k < d.size(); ++k) {
          ws.inputs.push_back(channels_[recv_[p.graph][rbase + k]]->front());
        }
        if (auto v = execute_point(plan, p.graph, t, i, ws.inputs, p.output, ws, validate_)) {
          control.fail(std::move(*v));
          return progressed;
        }
        for (std::size_t k = 0; k < d.size(); ++k) channels_[recv_[p.graph][rbase + k]]->pop();
        log.record(p.graph, plan.cell(t, i));
        control.note_progress();
        p.sending = true;
        p.next_send = 0;
        progressed = true;
      }
      const auto r = plan.reverse_deps(t, i);
      const std::size_t sbase = plan.rdep_base(t, i);
      while (p.next_send < r.size()) {
        if (!channels_[send_[p.graph][sbase + p.next_send]]->try_push(p.output)) return progressed;
        ++p.next_send;
        progressed = true;
      }
      p.sending = false;
      ++p.step;
    }
    return progressed;
  }

  void work(std::size_t w, RunControl& control, ExecutionLog& log) {
    WorkerState& ws = states_[w];
    std::vector<std::size_t> live = owned_[w];
    IdleWait idle(control);
    while (!live.empty() && !control.aborted()) {
      bool any = false;
      for (std::size_t k = 0; k < live.size();) {
        Process& p = processes_[live[k]];
        any |= advance(p, ws, control, log);
        if (p.step >= plans_[p.graph].height()) {
          live[k] = live.back();
          live.pop_back();
        } else {
          ++k;
        }
      }
      if (any) {
        idle.reset();
      } else if (idle.wait()) {
        control.fail_deadlock(diagnose(live));
        return;
      }
    }
  }

  std::string diagnose(const std::vector<std::size_t>& live) const {
    std::ostringstream os;
    os << "csp: no progress within watchdog; blocked processes:";
    std::size_t shown = 0;
    for (std::size_t idx : live) {
      const Process& p = processes_[idx];
      os << " [graph " << p.graph << " column " << p.column << " step " << p.step
         << (p.sending ? " sending" : " receiving") << "]";
      if (++shown == 8) break;
    }
    return os.str();
  }

  std::span<const GraphPlan> plans_;
  bool validate_;
  WorkerTeam team_;
  std::vector<std::unique_ptr<Channel>> channels_;
  // Channel index parallel to each graph's flattened deps / reverse_deps.
  std::vector<std::vector<std::size_t>> recv_;
  std::vector<std::vector<std::size_t>> send_;
  std::vector<Process> processes_;
  std::vector<std::vector<std::size_t>> owned_;
  std::vector<WorkerState> states_;
};

}  // namespace taskbench
