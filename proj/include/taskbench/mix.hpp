#pragma once

#include <cstdint>

namespace taskbench {

// SplitMix64 finalizer. Stateless, so any (key tuple) maps to the same value
// on every thread and in every executor.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds an arbitrary key tuple into one 64-bit value.
template <typename... Keys>
constexpr std::uint64_t mix(std::uint64_t seed, Keys... keys) noexcept {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(keys))), ...);
  return h;
}

// Top 53 bits scaled to [0, 1).
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Domain tags keep the dependence and imbalance streams uncorrelated when they
// share a seed.
inline constexpr std::uint64_t kRandomDepsDomain = 0x52414e44ULL;  // "RAND"
inline constexpr std::uint64_t kImbalanceDomain = 0x494d424cULL;   // "IMBL"

}  // namespace taskbench
