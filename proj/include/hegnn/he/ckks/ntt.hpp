// SPDX-License-Identifier: Apache-2.0
//
// Negacyclic number-theoretic transform over Z_q[X]/(X^n + 1).
// Cooley-Tukey forward / Gentleman-Sande inverse with the 2n-th root powers
// stored in bit-reversed order and Shoup-precomputed companions. Forward
// output is in bit-reversed evaluation order; pointwise products of two
// forward transforms followed by the inverse give the negacyclic product.

#pragma once

#include <cstdint>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/ckks/modarith.hpp"

namespace hegnn::he::ckks {

inline std::size_t bit_reverse(std::size_t v, int bits) {
  std::size_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | (v & 1);
    v >>= 1;
  }
  return r;
}

class NttTables {
 public:
  NttTables() = default;

  NttTables(std::size_t n, u64 q) : n_(n), q_(q) {
    log_n_ = 0;
    while ((std::size_t(1) << log_n_) < n) ++log_n_;
    u64 psi = find_primitive_2n_root();
    u64 psi_inv = inv_mod(psi, q);

    psi_brv_.resize(n);
    psi_brv_shoup_.resize(n);
    psi_inv_brv_.resize(n);
    psi_inv_brv_shoup_.resize(n);
    u64 p = 1, pi = 1;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = bit_reverse(i, log_n_);
      psi_brv_[r] = p;
      psi_brv_shoup_[r] = shoup_precompute(p, q);
      psi_inv_brv_[r] = pi;
      psi_inv_brv_shoup_[r] = shoup_precompute(pi, q);
      p = mul_mod(p, psi, q);
      pi = mul_mod(pi, psi_inv, q);
    }
    n_inv_ = inv_mod(static_cast<u64>(n), q);
    n_inv_shoup_ = shoup_precompute(n_inv_, q);
  }

  u64 modulus() const { return q_; }
  std::size_t size() const { return n_; }
  int log_size() const { return log_n_; }

  void forward(u64* a) const {
    std::size_t t = n_;
    for (std::size_t m = 1; m < n_; m <<= 1) {
      t >>= 1;
      for (std::size_t i = 0; i < m; ++i) {
        const u64 w = psi_brv_[m + i];
        const u64 ws = psi_brv_shoup_[m + i];
        u64* x = a + 2 * i * t;
        u64* y = x + t;
        for (std::size_t j = 0; j < t; ++j) {
          const u64 u = x[j];
          const u64 v = mul_mod_shoup(y[j], w, ws, q_);
          x[j] = add_mod(u, v, q_);
          y[j] = sub_mod(u, v, q_);
        }
      }
    }
  }

  void inverse(u64* a) const {
    std::size_t t = 1;
    for (std::size_t m = n_; m > 1; m >>= 1) {
      const std::size_t h = m >> 1;
      std::size_t j1 = 0;
      for (std::size_t i = 0; i < h; ++i) {
        const u64 w = psi_inv_brv_[h + i];
        const u64 ws = psi_inv_brv_shoup_[h + i];
        u64* x = a + j1;
        u64* y = x + t;
        for (std::size_t j = 0; j < t; ++j) {
          const u64 u = x[j];
          const u64 v = y[j];
          x[j] = add_mod(u, v, q_);
          y[j] = mul_mod_shoup(sub_mod(u, v, q_), w, ws, q_);
        }
        j1 += 2 * t;
      }
      t <<= 1;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      a[j] = mul_mod_shoup(a[j], n_inv_, n_inv_shoup_, q_);
    }
  }

 private:
  u64 find_primitive_2n_root() const {
    // psi = g^((q-1)/2n) for a candidate g; accept when psi^n = -1.
    const u64 exp = (q_ - 1) / (2 * static_cast<u64>(n_));
    for (u64 g = 2; g < 1000; ++g) {
      u64 psi = pow_mod(g, exp, q_);
      if (psi != 0 && pow_mod(psi, static_cast<u64>(n_), q_) == q_ - 1) return psi;
    }
    throw ParameterError("no primitive 2n-th root found for modulus " + std::to_string(q_));
  }

  std::size_t n_ = 0;
  int log_n_ = 0;
  u64 q_ = 0;
  u64 n_inv_ = 0, n_inv_shoup_ = 0;
  std::vector<u64> psi_brv_, psi_brv_shoup_, psi_inv_brv_, psi_inv_brv_shoup_;
};

}  // namespace hegnn::he::ckks
