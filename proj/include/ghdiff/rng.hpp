#ifndef GHDIFF_RNG_HPP
#define GHDIFF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ghdiff {

// splitmix64; whitens seed material before it reaches the engine so that
// structured seeds (agent index, purpose tag) yield unrelated streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(splitmix64(base) ^ (0x9e3779b97f4a7c15ULL + (salt << 1) + 1));
}

// Every consumer of randomness owns exactly one stream, derived from
// (master seed, purpose, index). Streams never alias, so adding or removing
// draws in one consumer cannot shift any other consumer's sequence.
enum class StreamPurpose : std::uint64_t {
  kData = 1,
  kPerturbation = 2,
  kEval = 3,
  kTopology = 4,
  kReplica = 5,
  kProbe = 6,
};

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1); midpoints of a 2^52 grid, so the
  // endpoints are unreachable and symmetric transforms stay finite.
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Box-Muller; consumes two uniforms per value, no spare caching, so the
  // draw count per call is fixed and replay stays exact.
  double standard_normal() {
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // +1 or -1 with equal probability.
  double rademacher() { return uniform01() < 0.5 ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
};

inline RngStream make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                             std::uint64_t index) {
  return RngStream(
      mix_seed(mix_seed(master_seed, static_cast<std::uint64_t>(purpose)), index));
}

inline std::uint64_t replica_seed(std::uint64_t master_seed,
                                  std::uint64_t replica_index) {
  return mix_seed(
      mix_seed(master_seed, static_cast<std::uint64_t>(StreamPurpose::kReplica)),
      replica_index);
}

}  // namespace ghdiff

#endif  // GHDIFF_RNG_HPP
