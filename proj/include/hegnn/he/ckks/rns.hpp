// SPDX-License-Identifier: Apache-2.0
//
// RNS polynomial storage. A polynomial holds one residue row per prime, each
// row `n` coefficients; `prime_ids` records which chain prime every row
// belongs to (data rows are contiguous from the chain base, key-switching
// temporaries additionally carry the special prime as their last row).

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/ckks/modarith.hpp"
#include "hegnn/he/ckks/ntt.hpp"

namespace hegnn::he::ckks {

struct RnsContext {
  std::size_t n = 0;
  std::vector<u64> primes;        // [base, scaling..., special]
  std::vector<NttTables> tables;  // aligned with primes

  std::size_t special_index() const { return primes.size() - 1; }
  std::size_t data_prime_count() const { return primes.size() - 1; }

  void init(std::size_t ring_degree, const std::vector<u64>& prime_list) {
    n = ring_degree;
    primes = prime_list;
    tables.clear();
    tables.reserve(primes.size());
    for (u64 q : primes) tables.emplace_back(n, q);
  }
};

struct RnsPoly {
  std::vector<u64> data;               // rows * n, row-major
  std::vector<std::uint32_t> prime_ids;
  std::size_t n = 0;
  bool ntt_form = false;

  std::size_t rows() const { return prime_ids.size(); }
  u64* row(std::size_t r) { return data.data() + r * n; }
  const u64* row(std::size_t r) const { return data.data() + r * n; }
};

inline RnsPoly make_poly(const RnsContext& ctx, std::size_t row_count, bool with_special,
                         bool ntt_form) {
  RnsPoly p;
  p.n = ctx.n;
  p.ntt_form = ntt_form;
  for (std::size_t r = 0; r < row_count; ++r) p.prime_ids.push_back(static_cast<std::uint32_t>(r));
  if (with_special) p.prime_ids.push_back(static_cast<std::uint32_t>(ctx.special_index()));
  p.data.assign(p.prime_ids.size() * ctx.n, 0);
  return p;
}

inline void ntt_all(const RnsContext& ctx, RnsPoly& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) ctx.tables[p.prime_ids[r]].forward(p.row(r));
  p.ntt_form = true;
}

inline void intt_all(const RnsContext& ctx, RnsPoly& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) ctx.tables[p.prime_ids[r]].inverse(p.row(r));
  p.ntt_form = false;
}

inline void add_inplace(const RnsContext& ctx, RnsPoly& a, const RnsPoly& b) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const u64 q = ctx.primes[a.prime_ids[r]];
    u64* x = a.row(r);
    const u64* y = b.row(r);
    for (std::size_t j = 0; j < a.n; ++j) x[j] = add_mod(x[j], y[j], q);
  }
}

inline void sub_inplace(const RnsContext& ctx, RnsPoly& a, const RnsPoly& b) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const u64 q = ctx.primes[a.prime_ids[r]];
    u64* x = a.row(r);
    const u64* y = b.row(r);
    for (std::size_t j = 0; j < a.n; ++j) x[j] = sub_mod(x[j], y[j], q);
  }
}

inline void negate_inplace(const RnsContext& ctx, RnsPoly& a) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const u64 q = ctx.primes[a.prime_ids[r]];
    u64* x = a.row(r);
    for (std::size_t j = 0; j < a.n; ++j) x[j] = x[j] == 0 ? 0 : q - x[j];
  }
}

// Pointwise product; both operands must be in NTT form with matching rows.
inline RnsPoly mult_pointwise(const RnsContext& ctx, const RnsPoly& a, const RnsPoly& b) {
  RnsPoly out = a;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const u64 q = ctx.primes[a.prime_ids[r]];
    u64* x = out.row(r);
    const u64* y = b.row(r);
    for (std::size_t j = 0; j < a.n; ++j) x[j] = mul_mod(x[j], y[j], q);
  }
  return out;
}

inline void mult_accumulate(const RnsContext& ctx, RnsPoly& acc, const RnsPoly& a,
                            const RnsPoly& b) {
  for (std::size_t r = 0; r < acc.rows(); ++r) {
    const u64 q = ctx.primes[acc.prime_ids[r]];
    u64* out = acc.row(r);
    const u64* x = a.row(r);
    const u64* y = b.row(r);
    for (std::size_t j = 0; j < acc.n; ++j) {
      out[j] = add_mod(out[j], mul_mod(x[j], y[j], q), q);
    }
  }
}

// Drops trailing rows so the polynomial lives on the first `keep` primes.
inline void drop_rows_to(RnsPoly& p, std::size_t keep) {
  p.prime_ids.resize(keep);
  p.data.resize(keep * p.n);
}

// --- deterministic sampling -------------------------------------------------

// Ternary secret/ephemeral polynomial with entries in {-1, 0, 1}.
inline RnsPoly sample_ternary(const RnsContext& ctx, std::size_t row_count, bool with_special,
                              std::mt19937_64& rng) {
  RnsPoly p = make_poly(ctx, row_count, with_special, false);
  std::vector<int> coeffs(ctx.n);
  for (auto& c : coeffs) c = static_cast<int>(rng() % 3) - 1;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const u64 q = ctx.primes[p.prime_ids[r]];
    u64* x = p.row(r);
    for (std::size_t j = 0; j < ctx.n; ++j) {
      x[j] = coeffs[j] < 0 ? q - 1 : static_cast<u64>(coeffs[j]);
    }
  }
  return p;
}

// Centered Gaussian error, sigma = 3.2, via an explicit Box-Muller transform
// so the stream is identical across standard libraries.
inline RnsPoly sample_gaussian(const RnsContext& ctx, std::size_t row_count, bool with_special,
                               std::mt19937_64& rng, double sigma = 3.2) {
  RnsPoly p = make_poly(ctx, row_count, with_special, false);
  std::vector<long> coeffs(ctx.n);
  for (std::size_t j = 0; j < ctx.n; j += 2) {
    double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double r = sigma * std::sqrt(-2.0 * std::log(u1));
    coeffs[j] = std::lround(r * std::cos(6.283185307179586 * u2));
    if (j + 1 < ctx.n) coeffs[j + 1] = std::lround(r * std::sin(6.283185307179586 * u2));
  }
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const u64 q = ctx.primes[p.prime_ids[r]];
    u64* x = p.row(r);
    for (std::size_t j = 0; j < ctx.n; ++j) {
      long c = coeffs[j];
      x[j] = c < 0 ? q - static_cast<u64>(-c) : static_cast<u64>(c);
    }
  }
  return p;
}

inline RnsPoly sample_uniform(const RnsContext& ctx, std::size_t row_count, bool with_special,
                              std::mt19937_64& rng) {
  RnsPoly p = make_poly(ctx, row_count, with_special, true);  // already "NTT form"
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const u64 q = ctx.primes[p.prime_ids[r]];
    u64* x = p.row(r);
    for (std::size_t j = 0; j < ctx.n; ++j) x[j] = rng() % q;
  }
  return p;
}

}  // namespace hegnn::he::ckks
