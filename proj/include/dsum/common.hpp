#pragma once
// Shared utilities: deterministic RNG streams, bit accounting, tunable constants.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsum {

using i128 = __int128;
using u128 = unsigned __int128;

std::string i128_to_string(i128 v);

// Bits needed for a value in [0, range).
inline int ceil_log2(uint64_t range) {
  if (range <= 1) return 0;
  int b = 0;
  for (uint64_t v = range - 1; v != 0; v >>= 1) ++b;
  return b;
}

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t derive(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }
inline uint64_t derive(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(derive(a, b) ^ c);
}
inline uint64_t derive(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return mix64(derive(a, b, c) ^ d);
}

// Counter-based splitmix64 stream. Streams for (seed, node, round) tuples are
// derived with `derive` so nodes and rounds are independent and replayable.
class Rng {
 public:
  explicit Rng(uint64_t seed) : s_(seed) {}

  uint64_t u64() {
    s_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = s_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // in [0, 1)
  double real() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  // in [0, n)
  int64_t below(int64_t n) {
    return static_cast<int64_t>((u128(u64()) * u128(uint64_t(n))) >> 64);
  }

  // in [1, n]
  int one_to(int n) { return 1 + static_cast<int>(below(n)); }

  bool coin() { return (u64() >> 63) != 0; }

 private:
  uint64_t s_;
};

// Engine payload accounting. One "word" is ceil(log2(max(n, N, 16))) bits and a
// message may carry at most c0 words worth of bits.
struct BitBudget {
  int word_bits = 16;
  int bits = 128;
  static BitBudget make(int n, int64_t value_domain, int c0);
};

// Tunable multipliers the analysis hides inside O(.). Overridable via
// DSUM_C0, DSUM_CMED, DSUM_CAMS, DSUM_C, DSUM_CPRIME, DSUM_C1, DSUM_CROUTE,
// DSUM_CDIFF environment variables.
struct Constants {
  int c0 = 8;      // payload budget words per message
  int c_med = 2;   // median width multiplier (congest sketches)
  int c_ams = 8;   // AMS repetition multiplier
  int c_fk = 4;    // gossip F_k phase-count multiplier
  int c_est = 8;   // gossip F_p estimator-count multiplier
  int c_push = 6;  // push-sum round-budget multiplier
  int c_route = 1; // cost-model router exponent constant
  int c_diff = 4;  // rumor / min-diffusion round-budget multiplier
  static Constants from_env();
};

struct ProtocolViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dsum
