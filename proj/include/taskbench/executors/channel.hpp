#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

namespace taskbench {

// Bounded single-producer/single-consumer queue of fixed-size messages.
// The consumer reads messages in place via front() and releases them with
// pop(), so a receive costs no copy beyond the sender's.
class Channel {
 public:
  Channel(std::size_t capacity, std::size_t message_bytes)
      : capacity_(capacity), bytes_(message_bytes), storage_(capacity * message_bytes) {
    if (capacity == 0) throw std::invalid_argument("channel capacity must be positive");
  }

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t message_bytes() const noexcept { return bytes_; }

  // Producer side.
  bool try_push(std::span<const std::byte> msg) noexcept {
    const std::uint64_t tail = tail_.load(std::memory_order_relaxed);
    if (tail - head_.load(std::memory_order_acquire) == capacity_) return false;
    std::memcpy(slot(tail), msg.data(), bytes_);
    tail_.store(tail + 1, std::memory_order_release);
    return true;
  }

  // Consumer side.
  [[nodiscard]] bool empty() const noexcept {
    return head_.load(std::memory_order_relaxed) == tail_.load(std::memory_order_acquire);
  }

  [[nodiscard]] std::span<const std::byte> front() const noexcept {
    return {slot(head_.load(std::memory_order_relaxed)), bytes_};
  }

  void pop() noexcept {
    head_.store(head_.load(std::memory_order_relaxed) + 1, std::memory_order_release);
  }

  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(tail_.load(std::memory_order_acquire) -
                                    head_.load(std::memory_order_acquire));
  }

  // Only while no producer or consumer is active.
  void reset() noexcept {
    head_.store(0, std::memory_order_relaxed);
    tail_.store(0, std::memory_order_relaxed);
  }

 private:
  std::byte* slot(std::uint64_t index) noexcept {
    return storage_.data() + (index % capacity_) * bytes_;
  }
  const std::byte* slot(std::uint64_t index) const noexcept {
    return storage_.data() + (index % capacity_) * bytes_;
  }

  std::size_t capacity_;
  std::size_t bytes_;
  std::vector<std::byte> storage_;
  alignas(64) std::atomic<std::uint64_t> head_{0};
  alignas(64) std::atomic<std::uint64_t> tail_{0};
};

}  // namespace taskbench
