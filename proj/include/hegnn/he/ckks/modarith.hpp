// SPDX-License-Identifier: Apache-2.0
//
// 64-bit modular arithmetic and NTT-friendly prime generation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"

namespace hegnn::he::ckks {

using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i64 = std::int64_t;

inline u64 add_mod(u64 a, u64 b, u64 q) {
  u64 s = a + b;
  return s >= q ? s - q : s;
}

inline u64 sub_mod(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + q - b; }

inline u64 mul_mod(u64 a, u64 b, u64 q) {
  return static_cast<u64>((static_cast<u128>(a) * b) % q);
}

inline u64 pow_mod(u64 base, u64 exp, u64 q) {
  u64 result = 1;
  base %= q;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, q);
    base = mul_mod(base, base, q);
    exp >>= 1;
  }
  return result;
}

inline u64 inv_mod(u64 a, u64 q) { return pow_mod(a, q - 2, q); }  // q prime

// Shoup-style precomputed multiplication by a fixed operand w mod q:
// w_shoup = floor(w * 2^64 / q); then a*w mod q via one high multiply.
inline u64 shoup_precompute(u64 w, u64 q) {
  return static_cast<u64>((static_cast<u128>(w) << 64) / q);
}

inline u64 mul_mod_shoup(u64 a, u64 w, u64 w_shoup, u64 q) {
  u64 hi = static_cast<u64>((static_cast<u128>(a) * w_shoup) >> 64);
  u64 r = a * w - hi * q;
  return r >= q ? r - q : r;
}

// Deterministic Miller-Rabin for 64-bit inputs.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 0; i < r - 1; ++i) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Generates `count` distinct primes congruent to 1 mod 2N, as close to 2^bits
// as possible and alternating above/below so that products of q_i / 2^bits
// ratios stay near one along the chain. `exclude` skips already-chosen primes.
inline std::vector<u64> generate_ntt_primes(int bits, std::size_t ring_degree,
                                            std::size_t count,
                                            const std::vector<u64>& exclude = {}) {
  const u64 step = 2 * static_cast<u64>(ring_degree);
  const u64 target = 1ULL << bits;
  auto excluded = [&](u64 q) {
    for (u64 e : exclude) {
      if (e == q) return true;
    }
    return false;
  };

  std::vector<u64> primes;
  u64 up = target + 1;            // candidates 1 mod 2N above 2^bits
  u64 down = target + 1 - step;   // and below
  bool take_up = true;
  while (primes.size() < count) {
    u64& cand = take_up ? up : down;
    bool found = false;
    while (!found) {
      if (is_prime(cand) && !excluded(cand)) {
        bool dup = false;
        for (u64 p : primes) dup |= (p == cand);
        if (!dup) {
          primes.push_back(cand);
          found = true;
        }
      }
      cand = take_up ? cand + step : cand - step;
      if (take_up && cand >= (target << 1)) {
        throw ParameterError("prime search overran 2^" + std::to_string(bits + 1));
      }
      if (!take_up && cand <= (target >> 1)) {
        throw ParameterError("prime search underran 2^" + std::to_string(bits - 1));
      }
    }
    take_up = !take_up;
  }
  return primes;
}

}  // namespace hegnn::he::ckks
