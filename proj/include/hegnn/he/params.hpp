// SPDX-License-Identifier: Apache-2.0
//
// Leveled-scheme parameter set. The modulus chain is ordered
//   [base prime, scaling primes..., special prime]
// where the base prime anchors decoding precision at level 0, each scaling
// prime funds one rescale, and the special prime is used only inside key
// switching. `levels` therefore equals the number of scaling primes: a fresh
// ciphertext sits at level `levels` and a level-0 ciphertext still has the
// base prime to decrypt against.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hegnn/errors.hpp"

namespace hegnn::he {

struct HEParams {
  std::size_t ring_degree = 0;       // power of two; slot count is ring_degree / 2
  std::vector<int> prime_bits;       // [base, scaling..., special]
  int scale_bits = 0;

  std::size_t slot_count() const { return ring_degree / 2; }
  int levels() const { return static_cast<int>(prime_bits.size()) - 2; }

  void validate() const {
    if (ring_degree < 8 || (ring_degree & (ring_degree - 1)) != 0) {
      throw ParameterError("ring_degree must be a power of two >= 8, got " +
                           std::to_string(ring_degree));
    }
    if (prime_bits.size() < 3) {
      throw ParameterError("modulus chain needs base, >=1 scaling, and special prime");
    }
    for (int b : prime_bits) {
      if (b < 20 || b > 61) {
        throw ParameterError("prime bit-size " + std::to_string(b) +
                             " outside supported range [20, 61]");
      }
    }
    int smallest_data = prime_bits.front();
    for (std::size_t i = 0; i + 1 < prime_bits.size(); ++i) {
      smallest_data = std::min(smallest_data, prime_bits[i]);
    }
    if (scale_bits < 10 || scale_bits > smallest_data + 1) {
      throw ParameterError("scale_bits " + std::to_string(scale_bits) +
                           " must lie in [10, smallest data prime + 1]");
    }
  }

  double scale() const { return std::ldexp(1.0, scale_bits); }

  bool operator==(const HEParams& o) const = default;
};

inline void to_json(nlohmann::json& j, const HEParams& p) {
  j = nlohmann::json{{"ring_degree", p.ring_degree},
                     {"prime_bits", p.prime_bits},
                     {"scale_bits", p.scale_bits}};
}

inline void from_json(const nlohmann::json& j, HEParams& p) {
  j.at("ring_degree").get_to(p.ring_degree);
  j.at("prime_bits").get_to(p.prime_bits);
  j.at("scale_bits").get_to(p.scale_bits);
}

inline HEParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open params file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("params file " + path + ": " + e.what());
  }
  HEParams p = j.get<HEParams>();
  p.validate();
  return p;
}

inline void save_params(const HEParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write params file: " + path);
  nlohmann::json j = p;
  out << j.dump(2) << "\n";
}

// Desk-scale default: N = 2^13 with a 20-level 40-bit chain and scale 2^40.
// Deep enough for the full pruned pipeline at the largest activation preset.
// Not a security-calibrated parameter set.
inline HEParams desk_params() {
  HEParams p;
  p.ring_degree = 1 << 13;
  p.prime_bits.push_back(60);
  for (int i = 0; i < 20; ++i) p.prime_bits.push_back(40);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

// Mirrors the production-style regime (N = 2^15, wide primes, scale 2^40).
// Provided as a preset file for completeness; desk tests do not run it.
inline HEParams paper_params() {
  HEParams p;
  p.ring_degree = 1 << 15;
  p.prime_bits.push_back(60);
  for (int i = 0; i < 24; ++i) p.prime_bits.push_back(50);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

// Desk-scale alternative with scale 2^30 and 30-bit scaling primes. Trades
// precision for a smaller total modulus; same depth as desk_params().
inline HEParams desk_scale30_params() {
  HEParams p;
  p.ring_degree = 1 << 13;
  p.prime_bits.push_back(60);
  for (int i = 0; i < 20; ++i) p.prime_bits.push_back(30);
  p.prime_bits.push_back(60);
  p.scale_bits = 30;
  return p;
}

// Small variant used by mass randomized tests where depth is shallow.
inline HEParams shallow_params(std::size_t ring_degree = 1 << 11, int levels = 4) {
  HEParams p;
  p.ring_degree = ring_degree;
  p.prime_bits.push_back(60);
  for (int i = 0; i < levels; ++i) p.prime_bits.push_back(40);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

}  // namespace hegnn::he
