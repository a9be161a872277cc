#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskbench/graph.hpp"

namespace taskbench {

// Every task output starts with its own (t, i) as two little-endian 64-bit
// integers, followed by filler byte k = (t + i + k) mod 256.
inline constexpr std::size_t kHeaderBytes = 16;
// Bodies above this size are probed instead of scanned.
inline constexpr std::size_t kFullScanLimit = 4096;
inline constexpr std::size_t kBodyProbes = 64;

namespace detail {

inline void store_le64(std::byte* dst, std::uint64_t v) noexcept {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, &v, sizeof v);
  } else {
    for (std::size_t b = 0; b < 8; ++b) dst[b] = static_cast<std::byte>((v >> (8 * b)) & 0xffu);
  }
}

inline std::uint64_t load_le64(const std::byte* src) noexcept {
  std::uint64_t v = 0;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&v, src, sizeof v);
  } else {
    for (std::size_t b = 0; b < 8; ++b) v |= std::uint64_t{static_cast<unsigned char>(src[b])} << (8 * b);
  }
  return v;
}

inline std::byte filler(Point p, std::size_t k) noexcept {
  return static_cast<std::byte>(
      (static_cast<std::uint64_t>(p.t) + static_cast<std::uint64_t>(p.i) + k) & 0xffu);
}

}  // namespace detail

inline void write_output(Point p, std::span<std::byte> out) {
  if (out.size() < kHeaderBytes) throw std::invalid_argument("task output needs at least 16 bytes");
  detail::store_le64(out.data(), static_cast<std::uint64_t>(p.t));
  detail::store_le64(out.data() + 8, static_cast<std::uint64_t>(p.i));
  for (std::size_t k = kHeaderBytes; k < out.size(); ++k) out[k] = detail::filler(p, k);
}

inline std::vector<std::byte> make_output(Point p, std::size_t output_bytes) {
  if (output_bytes < kHeaderBytes) throw std::invalid_argument("task output needs at least 16 bytes");
  std::vector<std::byte> out(output_bytes);
  write_output(p, out);
  return out;
}

inline Point decode_header(std::span<const std::byte> in) {
  if (in.size() < kHeaderBytes) throw std::invalid_argument("task output shorter than its header");
  return {static_cast<std::int64_t>(detail::load_le64(in.data())),
          static_cast<std::int64_t>(detail::load_le64(in.data() + 8))};
}

struct Violation {
  Point task;                                   // the consumer
  std::string message;
  std::optional<std::int64_t> expected_column;  // set on a dependency mismatch
  std::optional<std::int64_t> got_column;
  std::optional<Point> producer;                // set on a payload mismatch
  std::optional<std::size_t> byte_offset;

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os << "task (" << task.t << "," << task.i << "): " << message;
    return os.str();
  }
};

namespace detail {

inline bool body_intact(std::span<const std::byte> in, Point src, std::size_t output_bytes) noexcept {
  if (output_bytes <= kFullScanLimit) {
    for (std::size_t k = kHeaderBytes; k < output_bytes; ++k) {
      if (in[k] != filler(src, k)) return false;
    }
    return true;
  }
  const std::size_t body = output_bytes - kHeaderBytes;
  for (std::size_t m = 0; m < kBodyProbes; ++m) {
    const std::size_t k = kHeaderBytes + (body - 1) * m / (kBodyProbes - 1);
    if (in[k] != filler(src, k)) return false;
  }
  return true;
}

// Positional delivery with intact payloads: the common case, no allocation.
inline bool inputs_match(Point p, std::span<const std::int64_t> expected,
                         std::span<const std::span<const std::byte>> inputs,
                         std::size_t output_bytes) noexcept {
  if (inputs.size() != expected.size() || output_bytes < kHeaderBytes) return false;
  const auto want_t = static_cast<std::uint64_t>(p.t - 1);
  std::uint64_t diff = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::byte* in = inputs[k].data();
    diff |= (inputs[k].size() ^ output_bytes) | (load_le64(in) ^ want_t) |
            (load_le64(in + 8) ^ static_cast<std::uint64_t>(expected[k]));
  }
  if (diff != 0) return false;
  if (output_bytes == kHeaderBytes) return true;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!body_intact(inputs[k], {p.t - 1, expected[k]}, output_bytes)) return false;
  }
  return true;
}

// Full diagnosis, reached only when the fast check fails.
[[gnu::cold, gnu::noinline]] inline std::optional<Violation> diagnose_inputs(
    Point p, std::span<const std::int64_t> expected,
    std::span<const std::span<const std::byte>> inputs, std::size_t output_bytes) {
  auto fail = [&](std::string msg) {
    Violation v;
    v.task = p;
    v.message = std::move(msg);
    return v;
  };

  if (inputs.size() != expected.size()) {
    return fail("expected " + std::to_string(expected.size()) + " inputs, got " +
                std::to_string(inputs.size()));
  }
  for (const auto& in : inputs) {
    if (in.size() != output_bytes) {
      return fail("input of " + std::to_string(in.size()) + " bytes, expected " +
                  std::to_string(output_bytes));
    }
  }

  bool positional = true;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Point src = decode_header(inputs[k]);
    if (src.t != p.t - 1) {
      Violation v = fail("input from timestep " + std::to_string(src.t) + ", expected " +
                         std::to_string(p.t - 1));
      v.producer = src;
      return v;
    }
    if (src.i != expected[k]) positional = false;
  }

  if (!positional) {
    // Out-of-order delivery is fine as long as the multisets agree.
    std::vector<std::int64_t> want(expected.begin(), expected.end());
    std::vector<std::int64_t> got;
    got.reserve(inputs.size());
    for (const auto& in : inputs) got.push_back(decode_header(in).i);
    std::sort(want.begin(), want.end());
    std::sort(got.begin(), got.end());
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (want[k] != got[k]) {
        Violation v = fail("dependency mismatch: expected column " + std::to_string(want[k]) +
                           ", got " + std::to_string(got[k]));
        v.expected_column = want[k];
        v.got_column = got[k];
        return v;
      }
    }
  }

  for (const auto& in : inputs) {
    const Point src = decode_header(in);
    auto check = [&](std::size_t k) -> std::optional<Violation> {
      if (in[k] == detail::filler(src, k)) return std::nullopt;
      Violation v = fail("corrupt payload from (" + std::to_string(src.t) + "," +
                         std::to_string(src.i) + ") at byte " + std::to_string(k));
      v.producer = src;
      v.byte_offset = k;
      return v;
    };
    if (output_bytes <= kFullScanLimit) {
      for (std::size_t k = kHeaderBytes; k < output_bytes; ++k) {
        if (auto v = check(k)) return v;
      }
    } else {
      const std::size_t body = output_bytes - kHeaderBytes;
      for (std::size_t m = 0; m < kBodyProbes; ++m) {
        if (auto v = check(kHeaderBytes + (body - 1) * m / (kBodyProbes - 1))) return v;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Checks the payloads a task received. `expected` is the dependence set in
// enumeration order; `inputs[k]` should carry the output of (t-1, expected[k]).
// Returns the first problem found, or nullopt.
inline std::optional<Violation> verify_inputs(Point p, std::span<const std::int64_t> expected,
                                              std::span<const std::span<const std::byte>> inputs,
                                              std::size_t output_bytes) {
  if (detail::inputs_match(p, expected, inputs, output_bytes)) [[likely]] return std::nullopt;
  return detail::diagnose_inputs(p, expected, inputs, output_bytes);
}

inline std::optional<Violation> verify_inputs(Point p, const ColumnSet& expected,
                                              std::span<const std::span<const std::byte>> inputs,
                                              std::size_t output_bytes) {
  const std::vector<std::int64_t> cols = expected.to_vector();
  return verify_inputs(p, std::span<const std::int64_t>(cols), inputs, output_bytes);
}

}  // namespace taskbench
