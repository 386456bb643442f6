#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace meshmetrics {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combines a seed with a sequence of keys into an independent sub-seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Counter-based uniform in [0, 1): the same (seed, keys) always gives the same draw,
/// independent of how many other draws were made.
constexpr double counter_uniform(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) noexcept {
  return static_cast<double>(derive_seed(seed, keys) >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

// Purpose tags keep sub-streams of one link apart.
enum class Stream : std::uint64_t {
  ProbeForward = 1,
  ProbeReverse,
  ChannelForward,
  ChannelReverse,
  PacketPair,
  Fading,
  Replay,
  Measurement,
};

inline Rng make_rng(std::uint64_t seed, std::uint64_t link, Stream stream) {
  return Rng(derive_seed(seed, {link, static_cast<std::uint64_t>(stream)}));
}

}  // namespace meshmetrics
