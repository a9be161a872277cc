#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace taskbench {

// A fixed set of workers that repeatedly runs one job on every worker.
// Worker 0 is the calling thread; the rest are persistent threads, so
// timed runs do not pay thread creation.
class WorkerTeam {
 public:
  explicit WorkerTeam(std::size_t workers) : size_(workers == 0 ? 1 : workers) {
    threads_.reserve(size_ - 1);
    for (std::size_t w = 1; w < size_; ++w) {
      threads_.emplace_back([this, w] { loop(w); });
    }
  }

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  ~WorkerTeam() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
      ++generation_;
    }
    start_cv_.notify_all();
    for (auto& th : threads_) th.join();
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }

  // Runs job(w) for every worker w and returns when all have finished.
  // The first exception thrown by any worker is rethrown here.
  void run(const std::function<void(std::size_t)>& job) {
    {
      std::lock_guard lock(mu_);
      job_ = &job;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_cv_.notify_all();
    invoke(0);
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void invoke(std::size_t w) {
    try {
      (*job_)(w);
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void loop(std::size_t w) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        start_cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
      }
      invoke(w);
      {
        std::lock_guard lock(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::size_t size_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace taskbench
