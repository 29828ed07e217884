#pragma once

// Deterministic random streams.
//
// Every simulated series draws from its own generator whose seed is derived
// from a (master seed, replication, multipole, order) tuple with the
// SplitMix64 finalizer. Streams never share state, so the order in which
// they are consumed (or the thread that consumes them) cannot change any
// value.

#include <cstdint>
#include <random>

namespace sphcoint {

/// SplitMix64 finalizer (64-bit avalanche mix).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by (master, replication, ell, m).
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replication,
                                    std::int64_t ell, std::int64_t m) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ replication);
  h = mix64(h ^ static_cast<std::uint64_t>(ell));
  h = mix64(h ^ static_cast<std::uint64_t>(m));
  return h;
}

/// A seeded source of standard normal variates.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sphcoint
