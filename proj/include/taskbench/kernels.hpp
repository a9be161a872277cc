#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "taskbench/mix.hpp"

namespace taskbench {

enum class KernelKind { Compute, Memory, Empty };

inline std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::Compute: return "compute";
    case KernelKind::Memory: return "memory";
    case KernelKind::Empty: return "empty";
  }
  return "?";
}

inline std::optional<KernelKind> parse_kernel_kind(std::string_view name) noexcept {
  if (name == "compute") return KernelKind::Compute;
  if (name == "memory") return KernelKind::Memory;
  if (name == "empty") return KernelKind::Empty;
  return std::nullopt;
}

struct KernelSpec {
  KernelKind kind = KernelKind::Compute;
  std::uint64_t iterations = 0;
  std::uint64_t span_bytes = 0;     // bytes touched per iteration (memory)
  std::uint64_t scratch_bytes = 0;  // working set (memory)
  double imbalance = 0.0;           // degree in [0, 1]
  std::uint64_t seed = 0;
};

inline void validate(const KernelSpec& k) {
  if (!(k.imbalance >= 0.0 && k.imbalance <= 1.0)) {
    throw std::invalid_argument("kernel imbalance must lie in [0, 1]");
  }
  if (k.kind == KernelKind::Empty && k.iterations != 0) {
    throw std::invalid_argument("empty kernel requires iterations = 0");
  }
  if (k.kind == KernelKind::Memory) {
    if (k.span_bytes == 0 || k.span_bytes > k.scratch_bytes) {
      throw std::invalid_argument("memory kernel requires 0 < span <= scratch");
    }
    if (k.scratch_bytes % k.span_bytes != 0) {
      throw std::invalid_argument("memory kernel scratch must be a multiple of span");
    }
  }
}

// ---------------------------------------------------------------------------
// Compute kernel
// ---------------------------------------------------------------------------

inline constexpr std::size_t kComputeLanes = 64;
inline constexpr double kComputeInitial = 1.2345;
// 64 lanes, one multiply-add per lane, counted as 2 FLOPs.
inline constexpr double kFlopsPerIteration = 2.0 * kComputeLanes;

using ComputeLanes = std::array<double, kComputeLanes>;

inline void reset_lanes(std::span<double, kComputeLanes> lanes) noexcept {
  for (double& x : lanes) x = kComputeInitial;
}

// x <- x*x + x per lane. Written as two roundings: the build disables FP
// contraction so the lanes match the scalar recurrence bit for bit.
inline void compute_kernel(std::uint64_t iterations,
                           std::span<double, kComputeLanes> lanes) noexcept {
  double* a = lanes.data();
  for (std::uint64_t it = 0; it < iterations; ++it) {
    for (std::size_t l = 0; l < kComputeLanes; ++l) {
      a[l] = a[l] * a[l] + a[l];
    }
  }
}

// ---------------------------------------------------------------------------
// Memory kernel
// ---------------------------------------------------------------------------

// Read-modify-write of `span_bytes` per iteration, walking a window through
// `scratch` so the working set stays `scratch.size()` whatever the iteration
// count. Returns the cursor for the next call.
inline std::uint64_t memory_kernel(std::uint64_t iterations, std::uint64_t span_bytes,
                                   std::span<std::byte> scratch, std::uint64_t cursor) {
  const std::uint64_t total = scratch.size();
  if (span_bytes == 0 || span_bytes > total || total % span_bytes != 0) {
    throw std::invalid_argument("memory_kernel: scratch must be a nonzero multiple of span");
  }
  if (cursor % span_bytes != 0 || cursor >= total) {
    throw std::invalid_argument("memory_kernel: cursor must be a span-aligned offset");
  }
  const std::uint64_t words = span_bytes / sizeof(std::uint64_t);
  const std::uint64_t tail = span_bytes % sizeof(std::uint64_t);
  for (std::uint64_t it = 0; it < iterations; ++it) {
    std::byte* base = scratch.data() + cursor;
    for (std::uint64_t w = 0; w < words; ++w) {
      std::uint64_t v;
      std::memcpy(&v, base + w * sizeof v, sizeof v);
      ++v;
      std::memcpy(base + w * sizeof v, &v, sizeof v);
    }
    for (std::uint64_t b = span_bytes - tail; b < span_bytes; ++b) {
      base[b] = static_cast<std::byte>(static_cast<unsigned char>(base[b]) + 1u);
    }
    cursor += span_bytes;
    if (cursor == total) cursor = 0;
  }
  return cursor;
}

// ---------------------------------------------------------------------------
// Load imbalance
// ---------------------------------------------------------------------------

// (1 - imbalance) + imbalance * u with u uniform in [0, 1) and keyed on the
// task, so every executor sees the same per-task durations.
inline double imbalance_factor(const KernelSpec& k, std::uint64_t graph_id, std::int64_t t,
                               std::int64_t i) noexcept {
  if (k.imbalance == 0.0) return 1.0;
  const double u = to_unit(mix(k.seed, kImbalanceDomain, graph_id, t, i));
  return (1.0 - k.imbalance) + k.imbalance * u;
}

inline std::uint64_t effective_iterations(const KernelSpec& k, std::uint64_t graph_id,
                                          std::int64_t t, std::int64_t i) noexcept {
  if (k.imbalance == 0.0) return k.iterations;
  return static_cast<std::uint64_t>(
      std::llround(static_cast<double>(k.iterations) * imbalance_factor(k, graph_id, t, i)));
}

// FLOPs (compute) or bytes moved (memory) per executed iteration.
inline double work_per_iteration(const KernelSpec& k) noexcept {
  switch (k.kind) {
    case KernelKind::Compute: return kFlopsPerIteration;
    case KernelKind::Memory: return 2.0 * static_cast<double>(k.span_bytes);
    case KernelKind::Empty: return 0.0;
  }
  return 0.0;
}

}  // namespace taskbench
