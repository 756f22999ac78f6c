#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace obq {

// splitmix64 step; used to derive independent stream seeds from a base seed
// so that parallel work items never share generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic seed for stream `stream` of a run seeded with `base`.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t state = base;
  splitmix64(state);
  state ^= stream;
  return splitmix64(state);
}

// Fixed per-subsystem tags XORed into the global seed so different subsystems
// of one run draw from unrelated streams.
namespace seed_tag {
inline constexpr std::uint64_t kMcIou = 0x6d6361726c6f3031ull;
inline constexpr std::uint64_t kCorrelation = 0x636f72726c617465ull;
inline constexpr std::uint64_t kPerturb = 0x7065727475726230ull;
inline constexpr std::uint64_t kSweep = 0x7377656570303031ull;
inline constexpr std::uint64_t kBoxArm = 0x626f7861726d3031ull;
}  // namespace seed_tag

// Thin wrapper over mt19937_64 producing doubles from the high 53 bits, which
// keeps sequences identical across standard libraries (std::uniform_real_
// distribution does not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below requires n >= 1");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Fair +1 / -1 coin.
  int sign() { return (gen_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace obq
