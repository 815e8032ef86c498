// SPDX-License-Identifier: Apache-2.0
//
// Canonical-embedding encoder. A real slot vector v of length n/2 is placed
// on the odd powers of the primitive 2n-th complex root, with slots ordered
// along the orbit of the generator 5: slot j sits at root exponent 5^j mod 2n.
// With that ordering the ring automorphism X -> X^(5^r) realizes a cyclic
// left rotation of the slot vector by r, which is what the rotation keys
// implement. The transform itself is a twisted power-of-two FFT.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/ckks/modarith.hpp"
#include "hegnn/he/ckks/ntt.hpp"
#include "hegnn/he/ckks/rns.hpp"

namespace hegnn::he::ckks {

class Encoder {
 public:
  Encoder() = default;

  explicit Encoder(std::size_t ring_degree) : n_(ring_degree) {
    log_n_ = 0;
    while ((std::size_t(1) << log_n_) < n_) ++log_n_;
    const std::size_t slots = n_ / 2;

    twiddle_.resize(n_ / 2);
    for (std::size_t t = 0; t < n_ / 2; ++t) {
      double ang = 2.0 * kPi * static_cast<double>(t) / static_cast<double>(n_);
      twiddle_[t] = {std::cos(ang), std::sin(ang)};
    }
    twist_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      double ang = kPi * static_cast<double>(j) / static_cast<double>(n_);
      twist_[j] = {std::cos(ang), std::sin(ang)};
    }
    bitrev_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) bitrev_[i] = bit_reverse(i, log_n_);

    // slot j <-> natural evaluation index (5^j mod 2n - 1) / 2
    slot_to_nat_.resize(slots);
    u64 e = 1;
    const u64 two_n = 2 * static_cast<u64>(n_);
    for (std::size_t j = 0; j < slots; ++j) {
      slot_to_nat_[j] = static_cast<std::size_t>((e - 1) / 2);
      e = (e * 5) % two_n;
    }
  }

  std::size_t slot_count() const { return n_ / 2; }

  // values (length <= n/2) scaled by `scale`, rounded, reduced per prime row.
  RnsPoly encode(const RnsContext& ctx, const std::vector<double>& values, double scale,
                 std::size_t row_count) const {
    std::vector<std::complex<double>> z(n_, {0.0, 0.0});
    for (std::size_t j = 0; j < values.size(); ++j) {
      const std::size_t k = slot_to_nat_[j];
      const std::complex<double> v = {values[j] * scale, 0.0};
      z[k] = v;
      z[n_ - 1 - k] = std::conj(v);
    }

    // coefficients: untwisted forward DFT with 1/n normalization
    fft(z, /*invert=*/true);
    std::vector<double> coeffs(n_);
    double max_abs = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double c = (z[j] * std::conj(twist_[j])).real() / static_cast<double>(n_);
      coeffs[j] = c;
      max_abs = std::max(max_abs, std::abs(c));
    }

    // The two lowest chain primes bound exact decoding; leave 2^12 headroom.
    double budget = static_cast<double>(ctx.primes[0]);
    if (row_count > 1) budget *= static_cast<double>(ctx.primes[1]);
    if (max_abs * 2.0 * 4096.0 > budget) {
      throw CapacityError("encode: scaled values overflow the modulus budget");
    }

    RnsPoly p = make_poly(ctx, row_count, false, false);
    for (std::size_t r = 0; r < row_count; ++r) {
      const u64 q = ctx.primes[r];
      u64* x = p.row(r);
      for (std::size_t j = 0; j < n_; ++j) {
        double c = coeffs[j];
        i64 ic = static_cast<i64>(std::llround(c));
        x[j] = ic < 0 ? q - static_cast<u64>((-ic) % static_cast<i64>(q))
                      : static_cast<u64>(ic % static_cast<i64>(q));
        if (x[j] == q) x[j] = 0;
      }
    }
    return p;
  }

  // Reconstructs centered coefficients from the first one or two residue rows
  // (the underlying integers are far below their product), then evaluates.
  std::vector<double> decode(const RnsContext& ctx, const RnsPoly& poly, double scale) const {
    std::vector<std::complex<double>> z(n_);
    if (poly.rows() == 1) {
      const u64 q0 = ctx.primes[poly.prime_ids[0]];
      const u64 half = q0 / 2;
      const u64* r0 = poly.row(0);
      for (std::size_t j = 0; j < n_; ++j) {
        double c = r0[j] > half ? -static_cast<double>(q0 - r0[j]) : static_cast<double>(r0[j]);
        z[j] = twist_[j] * c;
      }
    } else {
      const u64 q0 = ctx.primes[poly.prime_ids[0]];
      const u64 q1 = ctx.primes[poly.prime_ids[1]];
      const u64 q0_inv_q1 = inv_mod(q0 % q1, q1);
      const u128 big = static_cast<u128>(q0) * q1;
      const u128 half = big / 2;
      const u64* r0 = poly.row(0);
      const u64* r1 = poly.row(1);
      for (std::size_t j = 0; j < n_; ++j) {
        u64 t = mul_mod(sub_mod(r1[j] % q1, r0[j] % q1, q1), q0_inv_q1, q1);
        u128 c = static_cast<u128>(r0[j]) + static_cast<u128>(q0) * t;
        double cd = c > half ? -static_cast<double>(big - c) : static_cast<double>(c);
        z[j] = twist_[j] * cd;
      }
    }

    fft(z, /*invert=*/false);
    const std::size_t slots = n_ / 2;
    std::vector<double> values(slots);
    for (std::size_t j = 0; j < slots; ++j) {
      values[j] = z[slot_to_nat_[j]].real() / scale;
    }
    return values;
  }

  // Galois element for a left rotation by `step` slots.
  u64 galois_element(long step) const {
    const long slots = static_cast<long>(n_ / 2);
    long r = ((step % slots) + slots) % slots;
    const u64 two_n = 2 * static_cast<u64>(n_);
    u64 g = 1;
    for (long i = 0; i < r; ++i) g = (g * 5) % two_n;
    return g;
  }

  // Permutation realizing X -> X^g on NTT-form rows: output[i] = input[perm[i]].
  std::vector<std::uint32_t> galois_ntt_permutation(u64 g) const {
    const u64 two_n = 2 * static_cast<u64>(n_);
    std::vector<std::uint32_t> perm(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const u64 e = 2 * static_cast<u64>(bitrev_[i]) + 1;
      const u64 eg = (static_cast<u128>(e) * g) % two_n;
      perm[i] = static_cast<std::uint32_t>(bitrev_[(eg - 1) / 2]);
    }
    return perm;
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  // Iterative radix-2 FFT. invert=false: X_k = sum_j x_j e^{+2pi i jk/n}.
  void fft(std::vector<std::complex<double>>& a, bool invert) const {
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t j = bitrev_[i];
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t stride = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          std::complex<double> w = twiddle_[k * stride];
          if (invert) w = std::conj(w);
          const std::complex<double> u = a[i + k];
          const std::complex<double> v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
        }
      }
    }
  }

  std::size_t n_ = 0;
  int log_n_ = 0;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::complex<double>> twist_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::size_t> slot_to_nat_;
};

}  // namespace hegnn::he::ckks
