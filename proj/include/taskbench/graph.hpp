#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "taskbench/kernels.hpp"
#include "taskbench/mix.hpp"

namespace taskbench {

// A task coordinate: timestep `t` (vertical) and column `i` (horizontal).
struct Point {
  std::int64_t t = 0;
  std::int64_t i = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// ---------------------------------------------------------------------------
// ColumnSet
// ---------------------------------------------------------------------------

// Inclusive run of consecutive columns.
struct ColumnRun {
  std::int64_t first = 0;
  std::int64_t last = 0;

  friend bool operator==(const ColumnRun&, const ColumnRun&) = default;
};

// A set of columns stored as sorted, disjoint, non-adjacent runs. Dependence
// sets are mostly one or two runs, so this stays tiny.
class ColumnSet {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = std::int64_t;
    using difference_type = std::ptrdiff_t;
    using pointer = const std::int64_t*;
    using reference = std::int64_t;

    iterator() = default;
    iterator(const ColumnSet* set, std::size_t run, std::int64_t col)
        : set_(set), run_(run), col_(col) {}

    std::int64_t operator*() const noexcept { return col_; }

    iterator& operator++() noexcept {
      if (col_ == set_->runs_[run_].last) {
        ++run_;
        col_ = run_ < set_->runs_.size() ? set_->runs_[run_].first : 0;
      } else {
        ++col_;
      }
      return *this;
    }

    iterator operator++(int) noexcept {
      iterator old = *this;
      ++*this;
      return old;
    }

    friend bool operator==(const iterator& a, const iterator& b) noexcept {
      return a.run_ == b.run_ && a.col_ == b.col_;
    }

   private:
    const ColumnSet* set_ = nullptr;
    std::size_t run_ = 0;
    std::int64_t col_ = 0;
  };

  ColumnSet() = default;

  static ColumnSet from_columns(std::vector<std::int64_t> cols) {
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    ColumnSet s;
    for (std::int64_t c : cols) s.push_back_sorted(c);
    return s;
  }

  // [first, last] intersected with [lo, hi).
  static ColumnSet clipped_run(std::int64_t first, std::int64_t last, std::int64_t lo,
                               std::int64_t hi) {
    ColumnSet s;
    first = std::max(first, lo);
    last = std::min(last, hi - 1);
    if (first <= last) s.runs_.push_back({first, last});
    return s;
  }

  // Columns must arrive in strictly increasing order.
  void push_back_sorted(std::int64_t c) {
    if (!runs_.empty() && runs_.back().last + 1 == c) {
      runs_.back().last = c;
    } else {
      runs_.push_back({c, c});
    }
  }

  [[nodiscard]] bool empty() const noexcept { return runs_.empty(); }

  [[nodiscard]] std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& r : runs_) n += static_cast<std::size_t>(r.last - r.first + 1);
    return n;
  }

  [[nodiscard]] bool contains(std::int64_t c) const noexcept {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), c,
                               [](std::int64_t v, const ColumnRun& r) { return v < r.first; });
    if (it == runs_.begin()) return false;
    --it;
    return c <= it->last;
  }

  [[nodiscard]] const std::vector<ColumnRun>& runs() const noexcept { return runs_; }

  [[nodiscard]] std::vector<std::int64_t> to_vector() const {
    return std::vector<std::int64_t>(begin(), end());
  }

  [[nodiscard]] iterator begin() const noexcept {
    return runs_.empty() ? end() : iterator(this, 0, runs_.front().first);
  }
  [[nodiscard]] iterator end() const noexcept { return iterator(this, runs_.size(), 0); }

  friend bool operator==(const ColumnSet&, const ColumnSet&) = default;

 private:
  std::vector<ColumnRun> runs_;
};

// ---------------------------------------------------------------------------
// Dependence patterns
// ---------------------------------------------------------------------------

enum class PatternKind { Trivial, Stencil, Fft, Sweep, Tree, Random, Nearest, Spread };

inline constexpr PatternKind kAllPatterns[] = {
    PatternKind::Trivial, PatternKind::Stencil, PatternKind::Fft,     PatternKind::Sweep,
    PatternKind::Tree,    PatternKind::Random,  PatternKind::Nearest, PatternKind::Spread};

inline std::string_view to_string(PatternKind kind) noexcept {
  switch (kind) {
    case PatternKind::Trivial: return "trivial";
    case PatternKind::Stencil: return "stencil";
    case PatternKind::Fft: return "fft";
    case PatternKind::Sweep: return "sweep";
    case PatternKind::Tree: return "tree";
    case PatternKind::Random: return "random";
    case PatternKind::Nearest: return "nearest";
    case PatternKind::Spread: return "spread";
  }
  return "?";
}

inline std::optional<PatternKind> parse_pattern_kind(std::string_view name) noexcept {
  for (PatternKind k : kAllPatterns) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

inline bool pattern_needs_power_of_two(PatternKind k) noexcept {
  return k == PatternKind::Fft || k == PatternKind::Tree;
}

struct DependencePattern {
  PatternKind kind = PatternKind::Stencil;
  std::int64_t radix = 0;   // nearest / spread
  double fraction = 0.5;    // random
  std::uint64_t seed = 0;   // random

  static DependencePattern trivial() { return {PatternKind::Trivial}; }
  static DependencePattern stencil() { return {PatternKind::Stencil}; }
  static DependencePattern fft() { return {PatternKind::Fft}; }
  static DependencePattern sweep() { return {PatternKind::Sweep}; }
  static DependencePattern tree() { return {PatternKind::Tree}; }
  static DependencePattern random(double fraction = 0.5, std::uint64_t seed = 0) {
    return {PatternKind::Random, 0, fraction, seed};
  }
  static DependencePattern nearest(std::int64_t k) { return {PatternKind::Nearest, k}; }
  static DependencePattern spread(std::int64_t k) { return {PatternKind::Spread, k}; }
};

struct TaskGraphSpec {
  std::uint64_t graph_id = 0;
  std::int64_t width = 1;
  std::int64_t height = 1;
  DependencePattern pattern;
  KernelSpec kernel;
  std::size_t output_bytes = 16;
};

inline void validate(const TaskGraphSpec& g) {
  if (g.width < 1 || g.height < 1) {
    throw std::invalid_argument("graph width and height must be at least 1");
  }
  if (pattern_needs_power_of_two(g.pattern.kind) &&
      !std::has_single_bit(static_cast<std::uint64_t>(g.width))) {
    throw std::invalid_argument(std::string(to_string(g.pattern.kind)) +
                                " pattern requires a power-of-two width");
  }
  if (g.pattern.radix < 0) throw std::invalid_argument("radix must be non-negative");
  if (!(g.pattern.fraction >= 0.0 && g.pattern.fraction <= 1.0)) {
    throw std::invalid_argument("random fraction must lie in [0, 1]");
  }
  if (g.output_bytes < 16) {
    throw std::invalid_argument("output_bytes must be at least 16");
  }
  validate(g.kernel);
}

namespace detail {

inline std::int64_t log2_width(std::int64_t width) noexcept {
  return static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(width))) - 1;
}

// 2^e, or nullopt once it reaches `limit` (offsets that large clip away).
inline std::optional<std::int64_t> pow2_below(std::int64_t e, std::int64_t limit) noexcept {
  if (e >= 62) return std::nullopt;
  const std::int64_t v = std::int64_t{1} << e;
  if (v >= limit) return std::nullopt;
  return v;
}

inline std::int64_t fft_offset(std::int64_t width, std::int64_t t_prime_source) noexcept {
  const std::int64_t levels = std::max<std::int64_t>(log2_width(width), 1);
  return std::int64_t{1} << (t_prime_source % levels);
}

inline ColumnSet symmetric_triple(std::int64_t i, std::int64_t off, std::int64_t width) {
  std::vector<std::int64_t> cols;
  cols.reserve(3);
  for (std::int64_t c : {i - off, i, i + off}) {
    if (c >= 0 && c < width) cols.push_back(c);
  }
  return ColumnSet::from_columns(std::move(cols));
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) noexcept { return (a + b - 1) / b; }

inline std::int64_t wrap(std::int64_t c, std::int64_t width) noexcept {
  c %= width;
  return c < 0 ? c + width : c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph queries
// ---------------------------------------------------------------------------

inline bool contains_point(const TaskGraphSpec& g, Point p) noexcept {
  if (p.t < 0 || p.t >= g.height || p.i < 0 || p.i >= g.width) return false;
  if (g.pattern.kind != PatternKind::Tree) return true;
  // Fan-out phase: at step t only multiples of W / 2^t are active.
  const std::int64_t levels = detail::log2_width(g.width);
  if (p.t >= levels) return true;
  const std::int64_t stride = g.width >> p.t;
  return p.i % stride == 0;
}

// Columns at timestep t-1 that task p depends on.
inline ColumnSet deps(const TaskGraphSpec& g, Point p) {
  if (p.t < 1 || !contains_point(g, p)) return {};
  const std::int64_t w = g.width;
  const std::int64_t i = p.i;
  switch (g.pattern.kind) {
    case PatternKind::Trivial:
      return {};
    case PatternKind::Stencil:
      return ColumnSet::clipped_run(i - 1, i + 1, 0, w);
    case PatternKind::Sweep:
      return ColumnSet::clipped_run(i - 1, i, 0, w);
    case PatternKind::Fft:
      return detail::symmetric_triple(i, detail::fft_offset(w, p.t - 1), w);
    case PatternKind::Tree: {
      const std::int64_t levels = detail::log2_width(w);
      if (p.t <= levels) {
        const std::int64_t block = w >> (p.t - 1);
        const std::int64_t parent = i - i % block;
        return ColumnSet::clipped_run(parent, parent, 0, w);
      }
      ColumnSet s;
      s.push_back_sorted(i);
      if (auto off = detail::pow2_below(p.t - 1 - levels, w); off && i + *off < w) {
        s.push_back_sorted(i + *off);
      }
      return s;
    }
    case PatternKind::Random: {
      ColumnSet s;
      for (std::int64_t j = 0; j < w; ++j) {
        const double u =
            to_unit(mix(g.pattern.seed, kRandomDepsDomain, g.graph_id, p.t, i, j));
        if (u < g.pattern.fraction) s.push_back_sorted(j);
      }
      return s;
    }
    case PatternKind::Nearest: {
      const std::int64_t k = g.pattern.radix;
      if (k == 0) return {};
      return ColumnSet::clipped_run(i - k / 2, i + detail::ceil_div(k, 2) - 1, 0, w);
    }
    case PatternKind::Spread: {
      const std::int64_t k = g.pattern.radix;
      if (k == 0) return {};
      const std::int64_t stride = detail::ceil_div(w, k);
      std::vector<std::int64_t> cols;
      cols.reserve(static_cast<std::size_t>(std::min(k, w)));
      for (std::int64_t j = 0; j < k; ++j) cols.push_back(detail::wrap(i + j * stride, w));
      return ColumnSet::from_columns(std::move(cols));
    }
  }
  return {};
}

// Columns at timestep t+1 that depend on task p.
inline ColumnSet reverse_deps(const TaskGraphSpec& g, Point p) {
  if (p.t + 1 >= g.height || !contains_point(g, p)) return {};
  const std::int64_t w = g.width;
  const std::int64_t i = p.i;
  const std::int64_t next = p.t + 1;
  switch (g.pattern.kind) {
    case PatternKind::Trivial:
      return {};
    case PatternKind::Stencil:
      return ColumnSet::clipped_run(i - 1, i + 1, 0, w);
    case PatternKind::Sweep:
      return ColumnSet::clipped_run(i, i + 1, 0, w);
    case PatternKind::Fft:
      return detail::symmetric_triple(i, detail::fft_offset(w, next - 1), w);
    case PatternKind::Tree: {
      const std::int64_t levels = detail::log2_width(w);
      if (next <= levels) {
        // Each active node fans out to itself and one new child.
        return ColumnSet::from_columns({i, i + (w >> next)});
      }
      ColumnSet s;
      if (auto off = detail::pow2_below(next - 1 - levels, w); off && i - *off >= 0) {
        s.push_back_sorted(i - *off);
      }
      s.push_back_sorted(i);
      return s;
    }
    case PatternKind::Random: {
      ColumnSet s;
      for (std::int64_t j = 0; j < w; ++j) {
        const double u =
            to_unit(mix(g.pattern.seed, kRandomDepsDomain, g.graph_id, next, j, i));
        if (u < g.pattern.fraction) s.push_back_sorted(j);
      }
      return s;
    }
    case PatternKind::Nearest: {
      const std::int64_t k = g.pattern.radix;
      if (k == 0) return {};
      return ColumnSet::clipped_run(i - (detail::ceil_div(k, 2) - 1), i + k / 2, 0, w);
    }
    case PatternKind::Spread: {
      const std::int64_t k = g.pattern.radix;
      if (k == 0) return {};
      const std::int64_t stride = detail::ceil_div(w, k);
      std::vector<std::int64_t> cols;
      cols.reserve(static_cast<std::size_t>(std::min(k, w)));
      for (std::int64_t j = 0; j < k; ++j) cols.push_back(detail::wrap(i - j * stride, w));
      return ColumnSet::from_columns(std::move(cols));
    }
  }
  return {};
}

inline std::uint64_t num_tasks(const TaskGraphSpec& g) noexcept {
  const auto w = static_cast<std::uint64_t>(g.width);
  const auto h = static_cast<std::uint64_t>(g.height);
  if (g.pattern.kind != PatternKind::Tree) return w * h;
  const auto levels = static_cast<std::uint64_t>(detail::log2_width(g.width));
  // Rows 0..levels-1 hold 2^t tasks, the rest are full.
  std::uint64_t n = 0;
  const std::uint64_t fan_rows = std::min(h, levels);
  for (std::uint64_t t = 0; t < fan_rows; ++t) n += std::uint64_t{1} << t;
  return n + (h - fan_rows) * w;
}

inline std::uint64_t num_deps(const TaskGraphSpec& g) {
  std::uint64_t n = 0;
  for (std::int64_t t = 1; t < g.height; ++t) {
    for (std::int64_t i = 0; i < g.width; ++i) n += deps(g, {t, i}).size();
  }
  return n;
}

}  // namespace taskbench
