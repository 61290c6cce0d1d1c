#pragma once

// Reproducible random streams. A 64-bit root seed plus a replication index
// fan out into independent substreams through SplitMix64 mixing; the tree
// structure and the infection/recovery dynamics always draw from distinct
// substreams so that realizing more of a tree never perturbs process noise.

#include <cmath>
#include <cstdint>
#include <random>

namespace treecp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamKind : std::uint64_t {
  Structure = 0,  // offspring draws while realizing a tree
  Process = 1,    // event race, targets, coupling marks
  Aux = 2,        // birth-time draws and other per-replication extras
};

// Collapses (rootSeed, replication, substream) into one well-mixed 64-bit
// seed. Distinct inputs give unrelated streams for practical purposes.
inline std::uint64_t deriveSeed(std::uint64_t rootSeed, std::uint64_t replication,
                                StreamKind kind) {
  std::uint64_t s = rootSeed;
  std::uint64_t a = splitmix64(s);
  s ^= replication * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(s);
  s ^= static_cast<std::uint64_t>(kind) * 0x9e3779b97f4a7c15ULL;
  return a ^ b ^ splitmix64(s);
}

// Thin deterministic wrapper around mt19937_64. The uniform/exponential
// transforms are hand-rolled (not std::distributions) so that a given seed
// yields the same byte-for-byte draw sequence on every standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Exp(rate); rate must be positive.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Uniform integer in [0, n), n >= 1. Multiply-shift mapping; the bias of
  // at most n / 2^64 is negligible for simulation purposes.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace treecp
