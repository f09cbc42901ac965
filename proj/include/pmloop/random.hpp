#pragma once

#include <cstdint>
#include <random>

namespace pmloop {

/// One step of the splitmix64 generator; advances `state`.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for (base seed, stream, index). Streams separate
/// unrelated consumers (restarts, MC draws, uuids) of one campaign seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) noexcept {
  std::uint64_t s = base;
  std::uint64_t a = splitmix64(s) ^ (stream * 0xd1b54a32d192ed03ULL);
  s = a;
  std::uint64_t b = splitmix64(s) ^ (index * 0x8cb92ba72f3d8dd7ULL);
  s = b;
  return splitmix64(s);
}

/// Portable random source. The distributions here are written out by hand
/// because the standard library's are implementation-defined, and replays
/// must be byte-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pmloop
