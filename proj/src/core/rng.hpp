#pragma once

#include <cmath>
#include <cstdint>

namespace chivar {

// Counter-based generator (Philox 4x32, 10 rounds). Every draw is a pure
// function of (key, counter), so ensembles can be evaluated in any order,
// on any number of workers, with bit-identical results.
namespace philox {

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

inline void round_once(uint32_t ctr[4], const uint32_t key[2]) {
  uint32_t hi0, lo0, hi1, lo1;
  mul_hi_lo(0xD2511F53u, ctr[0], hi0, lo0);
  mul_hi_lo(0xCD9E8D57u, ctr[2], hi1, lo1);
  uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
  uint32_t out1 = lo1;
  uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
  uint32_t out3 = lo0;
  ctr[0] = out0;
  ctr[1] = out1;
  ctr[2] = out2;
  ctr[3] = out3;
}

inline void block(uint64_t key64, uint64_t c0, uint64_t c1, uint32_t out[4]) {
  uint32_t ctr[4] = {static_cast<uint32_t>(c0), static_cast<uint32_t>(c0 >> 32),
                     static_cast<uint32_t>(c1), static_cast<uint32_t>(c1 >> 32)};
  uint32_t key[2] = {static_cast<uint32_t>(key64), static_cast<uint32_t>(key64 >> 32)};
  for (int r = 0; r < 10; ++r) {
    round_once(ctr, key);
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }
  out[0] = ctr[0];
  out[1] = ctr[1];
  out[2] = ctr[2];
  out[3] = ctr[3];
}

}  // namespace philox

// splitmix64 finalizer, used to derive sub-seeds (e.g. inner Monte Carlo
// seeds keyed by rebalance node).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Standard normal draw addressed by (seed, path, step). Box-Muller on two
// uniforms taken from one Philox block.
inline double normal_draw(uint64_t seed, uint64_t path, uint64_t step) {
  uint32_t w[4];
  philox::block(seed, path, step, w);
  uint64_t a = (static_cast<uint64_t>(w[0]) << 32) | w[1];
  uint64_t b = (static_cast<uint64_t>(w[2]) << 32) | w[3];
  // u1 in (0,1], u2 in [0,1)
  double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace chivar
