// SPDX-License-Identifier: Apache-2.0
//
// Leveled approximate-arithmetic backend over power-of-two cyclotomic rings.
//
// Chain layout: [base prime, scaling primes..., special prime]. A ciphertext
// at level l carries residue rows for primes 0..l; the special prime appears
// only inside key-switching. Multiplication relinearizes and rescales
// immediately, consuming one level; the tracked scale is re-normalized to
// 2^scale_bits after every rescale, with the (prime / 2^scale_bits) ratio
// absorbed as bounded multiplicative noise. Scaling primes alternate above
// and below 2^scale_bits so those ratios cancel along the chain.
//
// Key switching follows the single-special-prime hybrid: one digit per active
// prime, key component j carrying P * s' only on residue row j, accumulation
// over the extended basis, then exact division by P.

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/checks.hpp"
#include "hegnn/he/ckks/encoder.hpp"
#include "hegnn/he/ckks/modarith.hpp"
#include "hegnn/he/ckks/ntt.hpp"
#include "hegnn/he/ckks/rns.hpp"
#include "hegnn/he/params.hpp"
#include "hegnn/he/profile.hpp"
#include "hegnn/he/serial.hpp"

namespace hegnn::he {

struct CkksPlaintext {
  ckks::RnsPoly poly;  // NTT form
  int level = 0;
  double scale = 0.0;
};

struct CkksCiphertext {
  std::vector<ckks::RnsPoly> comps;  // NTT form
  int level = 0;
  double scale = 0.0;
  std::size_t slot_count = 0;
};

struct KswKey {
  std::vector<ckks::RnsPoly> b;  // per digit, rows [data primes..., special]
  std::vector<ckks::RnsPoly> a;
};

struct CkksKeySet {
  ckks::RnsPoly secret;  // NTT, rows [data primes..., special]
  ckks::RnsPoly pk_b, pk_a;
  KswKey relin;
  std::map<int, KswKey> rotation;
  std::set<int> steps;
};

class CkksBackend {
 public:
  using Plaintext = CkksPlaintext;
  using Ciphertext = CkksCiphertext;
  using KeySet = CkksKeySet;

  static constexpr const char* kName = "ckks";

  CkksBackend(HEParams params, std::uint64_t seed)
      : params_(std::move(params)), seed_(seed) {
    params_.validate();
    const int levels = params_.levels();
    const std::size_t n = params_.ring_degree;

    // Scaling primes first so their alternation around 2^scale_bits is not
    // perturbed by the wide base/special primes.
    std::vector<ckks::u64> scaling;
    {
      // Group scaling primes by requested bit size, preserving chain order.
      std::vector<ckks::u64> chosen;
      std::map<int, std::vector<ckks::u64>> pools;
      std::map<int, std::size_t> needed;
      for (int i = 1; i <= levels; ++i) needed[params_.prime_bits[i]]++;
      for (auto& [bits, count] : needed) {
        pools[bits] = ckks::generate_ntt_primes(bits, n, count, chosen);
        for (auto q : pools[bits]) chosen.push_back(q);
      }
      std::map<int, std::size_t> next;
      for (int i = 1; i <= levels; ++i) {
        int bits = params_.prime_bits[i];
        scaling.push_back(pools[bits][next[bits]++]);
      }
      std::vector<ckks::u64> base =
          ckks::generate_ntt_primes(params_.prime_bits.front(), n, 1, chosen);
      chosen.push_back(base[0]);
      std::vector<ckks::u64> special =
          ckks::generate_ntt_primes(params_.prime_bits.back(), n, 1, chosen);

      std::vector<ckks::u64> all;
      all.push_back(base[0]);
      for (auto q : scaling) all.push_back(q);
      all.push_back(special[0]);
      ctx_.init(n, all);
    }

    encoder_ = ckks::Encoder(n);

    // q_l^{-1} mod q_r for every rescale step, and special-prime constants.
    const auto& primes = ctx_.primes;
    rescale_inv_.assign(primes.size(), {});
    for (int l = 1; l <= levels; ++l) {
      rescale_inv_[l].resize(l);
      for (int r = 0; r < l; ++r) {
        rescale_inv_[l][r] = ckks::inv_mod(primes[l] % primes[r], primes[r]);
      }
    }
    const ckks::u64 p = primes.back();
    p_inv_mod_.resize(primes.size() - 1);
    p_mod_.resize(primes.size() - 1);
    for (std::size_t r = 0; r + 1 < primes.size(); ++r) {
      p_inv_mod_[r] = ckks::inv_mod(p % primes[r], primes[r]);
      p_mod_[r] = p % primes[r];
    }
  }

  const HEParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const ckks::RnsContext& context() const { return ctx_; }

  OpProfile profile() const { return profiler_.snapshot(); }
  void reset_profile() { profiler_.reset(); }

  // --- keys -----------------------------------------------------------------

  KeySet keygen(const std::vector<int>& rotation_steps) {
    std::mt19937_64 rng(seed_);
    const std::size_t data_rows = static_cast<std::size_t>(params_.levels()) + 1;

    KeySet ks;
    ks.secret = ckks::sample_ternary(ctx_, data_rows, /*with_special=*/true, rng);
    ckks::ntt_all(ctx_, ks.secret);

    // pk = (-(a s) + e, a) over the data primes.
    ckks::RnsPoly s_data = restrict_rows(ks.secret, data_rows);
    ks.pk_a = ckks::sample_uniform(ctx_, data_rows, false, rng);
    ckks::RnsPoly e = ckks::sample_gaussian(ctx_, data_rows, false, rng);
    ckks::ntt_all(ctx_, e);
    ks.pk_b = ckks::mult_pointwise(ctx_, ks.pk_a, s_data);
    ckks::negate_inplace(ctx_, ks.pk_b);
    ckks::add_inplace(ctx_, ks.pk_b, e);

    // Relinearization key targets s^2.
    ckks::RnsPoly s2 = ckks::mult_pointwise(ctx_, ks.secret, ks.secret);
    ks.relin = make_ksw_key(s2, ks.secret, rng);

    for (int step : rotation_steps) {
      if (step == 0 || ks.rotation.count(step)) continue;
      const ckks::u64 g = encoder_.galois_element(step);
      const auto perm = encoder_.galois_ntt_permutation(g);
      ckks::RnsPoly s_g = apply_permutation(ks.secret, perm);
      ks.rotation.emplace(step, make_ksw_key(s_g, ks.secret, rng));
      ks.steps.insert(step);
    }
    return ks;
  }

  // --- encode / encrypt -----------------------------------------------------

  Plaintext encode(const std::vector<double>& values, int level) const {
    check_level_exists(level, "encode");
    detail::check_capacity(values.size(), params_.slot_count(), "encode");
    Plaintext pt;
    pt.poly = encoder_.encode(ctx_, values, params_.scale(), static_cast<std::size_t>(level) + 1);
    ckks::ntt_all(ctx_, pt.poly);
    pt.level = level;
    pt.scale = params_.scale();
    return pt;
  }

  std::vector<double> decode(const Plaintext& pt) const {
    ckks::RnsPoly coeff = pt.poly;
    ckks::intt_all(ctx_, coeff);
    return encoder_.decode(ctx_, coeff, pt.scale);
  }

  Ciphertext encrypt(const std::vector<double>& values, const KeySet& keys) {
    detail::check_capacity(values.size(), params_.slot_count(), "encrypt");
    std::mt19937_64 rng(next_encrypt_seed());
    const std::size_t rows = static_cast<std::size_t>(params_.levels()) + 1;

    ckks::RnsPoly m = encoder_.encode(ctx_, values, params_.scale(), rows);
    ckks::RnsPoly u = ckks::sample_ternary(ctx_, rows, false, rng);
    ckks::ntt_all(ctx_, u);
    ckks::RnsPoly e0 = ckks::sample_gaussian(ctx_, rows, false, rng);
    ckks::RnsPoly e1 = ckks::sample_gaussian(ctx_, rows, false, rng);
    ckks::add_inplace(ctx_, e0, m);  // both still in coefficient form
    ckks::ntt_all(ctx_, e0);
    ckks::ntt_all(ctx_, e1);

    Ciphertext ct;
    ct.comps.resize(2);
    ct.comps[0] = ckks::mult_pointwise(ctx_, keys.pk_b, u);
    ckks::add_inplace(ctx_, ct.comps[0], e0);
    ct.comps[1] = ckks::mult_pointwise(ctx_, keys.pk_a, u);
    ckks::add_inplace(ctx_, ct.comps[1], e1);
    ct.level = params_.levels();
    ct.scale = params_.scale();
    ct.slot_count = params_.slot_count();
    return ct;
  }

  std::vector<double> decrypt(const Ciphertext& ct, const KeySet& keys) const {
    const std::size_t rows = ct.comps[0].rows();
    ckks::RnsPoly s = restrict_rows(keys.secret, rows);
    ckks::RnsPoly acc = ct.comps[0];
    ckks::RnsPoly s_pow = s;
    for (std::size_t c = 1; c < ct.comps.size(); ++c) {
      ckks::mult_accumulate(ctx_, acc, ct.comps[c], s_pow);
      if (c + 1 < ct.comps.size()) s_pow = ckks::mult_pointwise(ctx_, s_pow, s);
    }
    ckks::intt_all(ctx_, acc);
    return encoder_.decode(ctx_, acc, ct.scale);
  }

  // --- arithmetic -----------------------------------------------------------

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) {
    detail::check_binary_operands(a, b, "add");
    detail::check_slot_count(a, b, "add");
    Ciphertext out = a;
    for (std::size_t c = 0; c < out.comps.size(); ++c) {
      ckks::add_inplace(ctx_, out.comps[c], b.comps[c]);
    }
    profiler_.count_add();
    return out;
  }

  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) {
    detail::check_binary_operands(a, b, "sub");
    detail::check_slot_count(a, b, "sub");
    Ciphertext out = a;
    for (std::size_t c = 0; c < out.comps.size(); ++c) {
      ckks::sub_inplace(ctx_, out.comps[c], b.comps[c]);
    }
    profiler_.count_add();
    return out;
  }

  Ciphertext negate(const Ciphertext& a) {
    Ciphertext out = a;
    for (auto& comp : out.comps) ckks::negate_inplace(ctx_, comp);
    return out;
  }

  Ciphertext add_plain(const Ciphertext& a, const Plaintext& p) {
    detail::check_binary_operands(a, p, "add_plain");
    Ciphertext out = a;
    ckks::add_inplace(ctx_, out.comps[0], p.poly);
    profiler_.count_add_plain();
    return out;
  }

  Ciphertext mult(const Ciphertext& a, const Ciphertext& b, const KeySet& keys) {
    detail::check_binary_operands(a, b, "mult");
    detail::check_slot_count(a, b, "mult");
    detail::check_mult_level(a, "mult");

    ckks::RnsPoly d0 = ckks::mult_pointwise(ctx_, a.comps[0], b.comps[0]);
    ckks::RnsPoly d1 = ckks::mult_pointwise(ctx_, a.comps[0], b.comps[1]);
    ckks::mult_accumulate(ctx_, d1, a.comps[1], b.comps[0]);
    ckks::RnsPoly d2 = ckks::mult_pointwise(ctx_, a.comps[1], b.comps[1]);

    auto [k0, k1] = key_switch(d2, keys.relin);
    ckks::add_inplace(ctx_, d0, k0);
    ckks::add_inplace(ctx_, d1, k1);
    profiler_.count_mult_ct();
    profiler_.count_relinearize();

    Ciphertext out;
    out.comps.reserve(2);
    out.comps.push_back(std::move(d0));
    out.comps.push_back(std::move(d1));
    out.level = a.level;
    out.scale = a.scale * b.scale;
    out.slot_count = a.slot_count;
    rescale_inplace(out);
    return out;
  }

  Ciphertext mult_plain(const Ciphertext& a, const Plaintext& p) {
    detail::check_binary_operands(a, p, "mult_plain");
    detail::check_mult_level(a, "mult_plain");
    Ciphertext out = a;
    for (auto& comp : out.comps) comp = ckks::mult_pointwise(ctx_, comp, p.poly);
    out.scale = a.scale * p.scale;
    profiler_.count_mult_plain();
    rescale_inplace(out);
    return out;
  }

  Ciphertext rotate(const Ciphertext& a, int step, const KeySet& keys) {
    if (step == 0) return a;
    auto it = keys.rotation.find(step);
    if (it == keys.rotation.end()) {
      throw KeyError("rotate: no key for step " + std::to_string(step));
    }
    const ckks::u64 g = encoder_.galois_element(step);
    const auto perm = encoder_.galois_ntt_permutation(g);

    ckks::RnsPoly c0 = apply_permutation(a.comps[0], perm);
    ckks::RnsPoly c1 = apply_permutation(a.comps[1], perm);
    auto [k0, k1] = key_switch(c1, it->second);
    ckks::add_inplace(ctx_, c0, k0);

    Ciphertext out;
    out.comps.reserve(2);
    out.comps.push_back(std::move(c0));
    out.comps.push_back(std::move(k1));
    out.level = a.level;
    out.scale = a.scale;
    out.slot_count = a.slot_count;
    profiler_.count_rotate();
    return out;
  }

  Ciphertext mod_switch(const Ciphertext& a, int target_level) {
    detail::check_mod_switch(a.level, target_level, "mod_switch");
    Ciphertext out = a;
    for (auto& comp : out.comps) {
      ckks::drop_rows_to(comp, static_cast<std::size_t>(target_level) + 1);
    }
    out.level = target_level;
    observe(out);
    return out;
  }

  // --- serialization ----------------------------------------------------------

  void serialize(const Ciphertext& ct, BinaryWriter& w) const {
    write_header(w, BlobKind::kCkksCiphertext);
    w.u32(static_cast<std::uint32_t>(params_.ring_degree));
    w.i64(ct.level);
    w.f64(ct.scale);
    w.u64(ct.slot_count);
    w.u64(ct.comps.size());
    for (const auto& comp : ct.comps) write_poly(comp, w);
  }

  Ciphertext deserialize_ciphertext(BinaryReader& r) const {
    if (read_header(r) != BlobKind::kCkksCiphertext) {
      throw ParseError("container is not a lattice ciphertext");
    }
    if (r.u32() != params_.ring_degree) throw ParseError("ring degree mismatch");
    Ciphertext ct;
    ct.level = static_cast<int>(r.i64());
    ct.scale = r.f64();
    ct.slot_count = r.u64();
    ct.comps.resize(r.u64());
    for (auto& comp : ct.comps) comp = read_poly(r);
    return ct;
  }

  void serialize(const KeySet& ks, BinaryWriter& w) const {
    write_header(w, BlobKind::kCkksKeySet);
    w.u32(static_cast<std::uint32_t>(params_.ring_degree));
    write_poly(ks.secret, w);
    write_poly(ks.pk_b, w);
    write_poly(ks.pk_a, w);
    write_ksw(ks.relin, w);
    w.u64(ks.rotation.size());
    for (const auto& [step, key] : ks.rotation) {
      w.i64(step);
      write_ksw(key, w);
    }
  }

  KeySet deserialize_keyset(BinaryReader& r) const {
    if (read_header(r) != BlobKind::kCkksKeySet) {
      throw ParseError("container is not a lattice key set");
    }
    if (r.u32() != params_.ring_degree) throw ParseError("ring degree mismatch");
    KeySet ks;
    ks.secret = read_poly(r);
    ks.pk_b = read_poly(r);
    ks.pk_a = read_poly(r);
    ks.relin = read_ksw(r);
    std::uint64_t n_rot = r.u64();
    for (std::uint64_t i = 0; i < n_rot; ++i) {
      int step = static_cast<int>(r.i64());
      ks.rotation.emplace(step, read_ksw(r));
      ks.steps.insert(step);
    }
    return ks;
  }

 private:
  // --- key switching ----------------------------------------------------------

  KswKey make_ksw_key(const ckks::RnsPoly& s_target, const ckks::RnsPoly& s,
                      std::mt19937_64& rng) {
    const std::size_t data_rows = static_cast<std::size_t>(params_.levels()) + 1;
    KswKey key;
    key.b.resize(data_rows);
    key.a.resize(data_rows);
    for (std::size_t j = 0; j < data_rows; ++j) {
      key.a[j] = ckks::sample_uniform(ctx_, data_rows, true, rng);
      ckks::RnsPoly e = ckks::sample_gaussian(ctx_, data_rows, true, rng);
      ckks::ntt_all(ctx_, e);
      key.b[j] = ckks::mult_pointwise(ctx_, key.a[j], s);
      ckks::negate_inplace(ctx_, key.b[j]);
      ckks::add_inplace(ctx_, key.b[j], e);
      // P * s' enters only on residue row j.
      const ckks::u64 qj = ctx_.primes[j];
      const ckks::u64 pj = p_mod_[j];
      ckks::u64* brow = key.b[j].row(j);
      const ckks::u64* srow = s_target.row(j);
      for (std::size_t i = 0; i < ctx_.n; ++i) {
        brow[i] = ckks::add_mod(brow[i], ckks::mul_mod(pj, srow[i], qj), qj);
      }
    }
    return key;
  }

  // Switches NTT-form poly d (data rows 0..l) to the key's target secret.
  // Returns NTT-form (p0, p1) over the same data rows.
  std::pair<ckks::RnsPoly, ckks::RnsPoly> key_switch(const ckks::RnsPoly& d,
                                                     const KswKey& key) const {
    const std::size_t active = d.rows();
    const std::size_t special = ctx_.special_index();

    ckks::RnsPoly d_coeff = d;
    ckks::intt_all(ctx_, d_coeff);

    ckks::RnsPoly acc0 = ckks::make_poly(ctx_, active, true, true);
    ckks::RnsPoly acc1 = ckks::make_poly(ctx_, active, true, true);
    const std::size_t out_rows = acc0.rows();

    std::vector<ckks::u64> tmp(ctx_.n);
    for (std::size_t j = 0; j < active; ++j) {
      const std::size_t key_rows = key.b[j].rows();
      for (std::size_t r = 0; r < out_rows; ++r) {
        const std::size_t prime_id = acc0.prime_ids[r];
        const ckks::u64 qr = ctx_.primes[prime_id];
        const ckks::u64* digit_ntt;
        if (prime_id == j) {
          digit_ntt = d.row(j);
        } else {
          const ckks::u64* src = d_coeff.row(j);
          for (std::size_t i = 0; i < ctx_.n; ++i) tmp[i] = src[i] % qr;
          ctx_.tables[prime_id].forward(tmp.data());
          digit_ntt = tmp.data();
        }
        const std::size_t kr = prime_id == special ? key_rows - 1 : prime_id;
        const ckks::u64* kb = key.b[j].row(kr);
        const ckks::u64* ka = key.a[j].row(kr);
        ckks::u64* o0 = acc0.row(r);
        ckks::u64* o1 = acc1.row(r);
        for (std::size_t i = 0; i < ctx_.n; ++i) {
          o0[i] = ckks::add_mod(o0[i], ckks::mul_mod(digit_ntt[i], kb[i], qr), qr);
          o1[i] = ckks::add_mod(o1[i], ckks::mul_mod(digit_ntt[i], ka[i], qr), qr);
        }
      }
    }

    divide_by_special(acc0);
    divide_by_special(acc1);
    return {std::move(acc0), std::move(acc1)};
  }

  // Removes the special-prime row, dividing the remaining rows by P with
  // centered rounding. Input and output in NTT form.
  void divide_by_special(ckks::RnsPoly& poly) const {
    const std::size_t last = poly.rows() - 1;
    const ckks::u64 p = ctx_.primes[ctx_.special_index()];
    const ckks::u64 p_half = p / 2;

    std::vector<ckks::u64> sp(poly.row(last), poly.row(last) + ctx_.n);
    ctx_.tables[ctx_.special_index()].inverse(sp.data());

    std::vector<ckks::u64> lift(ctx_.n);
    for (std::size_t r = 0; r < last; ++r) {
      const std::size_t prime_id = poly.prime_ids[r];
      const ckks::u64 qr = ctx_.primes[prime_id];
      for (std::size_t i = 0; i < ctx_.n; ++i) {
        const ckks::u64 v = sp[i];
        lift[i] = v > p_half ? ckks::sub_mod(0, (p - v) % qr, qr) : v % qr;
      }
      ctx_.tables[prime_id].forward(lift.data());
      ckks::u64* row = poly.row(r);
      const ckks::u64 inv = p_inv_mod_[prime_id];
      for (std::size_t i = 0; i < ctx_.n; ++i) {
        row[i] = ckks::mul_mod(ckks::sub_mod(row[i], lift[i], qr), inv, qr);
      }
    }
    poly.prime_ids.resize(last);
    poly.data.resize(last * ctx_.n);
  }

  // Drops the top scaling prime, dividing by it with centered rounding; the
  // tracked scale snaps back to 2^scale_bits.
  void rescale_inplace(Ciphertext& ct) {
    const std::size_t top = ct.comps[0].rows() - 1;
    const ckks::u64 qt = ctx_.primes[top];
    const ckks::u64 qt_half = qt / 2;

    for (auto& comp : ct.comps) {
      std::vector<ckks::u64> t(comp.row(top), comp.row(top) + ctx_.n);
      ctx_.tables[top].inverse(t.data());
      std::vector<ckks::u64> lift(ctx_.n);
      for (std::size_t r = 0; r < top; ++r) {
        const ckks::u64 qr = ctx_.primes[r];
        for (std::size_t i = 0; i < ctx_.n; ++i) {
          const ckks::u64 v = t[i];
          lift[i] = v > qt_half ? ckks::sub_mod(0, (qt - v) % qr, qr) : v % qr;
        }
        ctx_.tables[r].forward(lift.data());
        ckks::u64* row = comp.row(r);
        const ckks::u64 inv = rescale_inv_[top][r];
        for (std::size_t i = 0; i < ctx_.n; ++i) {
          row[i] = ckks::mul_mod(ckks::sub_mod(row[i], lift[i], qr), inv, qr);
        }
      }
      ckks::drop_rows_to(comp, top);
    }
    ct.level -= 1;
    ct.scale = params_.scale();
    profiler_.count_rescale();
    observe(ct);
  }

  // --- helpers ----------------------------------------------------------------

  ckks::RnsPoly restrict_rows(const ckks::RnsPoly& p, std::size_t rows) const {
    ckks::RnsPoly out;
    out.n = p.n;
    out.ntt_form = p.ntt_form;
    out.prime_ids.assign(p.prime_ids.begin(), p.prime_ids.begin() + rows);
    out.data.assign(p.data.begin(), p.data.begin() + rows * p.n);
    return out;
  }

  ckks::RnsPoly apply_permutation(const ckks::RnsPoly& p,
                                  const std::vector<std::uint32_t>& perm) const {
    ckks::RnsPoly out = p;
    for (std::size_t r = 0; r < p.rows(); ++r) {
      const ckks::u64* src = p.row(r);
      ckks::u64* dst = out.row(r);
      for (std::size_t i = 0; i < ctx_.n; ++i) dst[i] = src[perm[i]];
    }
    return out;
  }

  void check_level_exists(int level, const char* what) const {
    if (level < 0 || level > params_.levels()) {
      throw ParameterError(std::string(what) + ": level " + std::to_string(level) +
                           " outside chain [0, " + std::to_string(params_.levels()) + "]");
    }
  }

  void observe(const Ciphertext& ct) { profiler_.observe_depth(params_.levels() - ct.level); }

  // Per-encryption nonce; encryption randomness must differ per call but stay
  // reproducible for a fixed backend seed.
  std::uint64_t next_encrypt_seed() {
    return seed_ ^ (0x9e3779b97f4a7c15ULL * (++encrypt_counter_));
  }

  void write_poly(const ckks::RnsPoly& p, BinaryWriter& w) const {
    w.u64(p.n);
    w.u8(p.ntt_form ? 1 : 0);
    std::vector<std::uint64_t> ids(p.prime_ids.begin(), p.prime_ids.end());
    w.u64_array(ids);
    w.u64_array(p.data);
  }

  ckks::RnsPoly read_poly(BinaryReader& r) const {
    ckks::RnsPoly p;
    p.n = r.u64();
    p.ntt_form = r.u8() != 0;
    for (auto v : r.u64_array()) p.prime_ids.push_back(static_cast<std::uint32_t>(v));
    p.data = r.u64_array();
    if (p.data.size() != p.rows() * p.n) throw ParseError("polynomial payload size mismatch");
    return p;
  }

  void write_ksw(const KswKey& k, BinaryWriter& w) const {
    w.u64(k.b.size());
    for (std::size_t j = 0; j < k.b.size(); ++j) {
      write_poly(k.b[j], w);
      write_poly(k.a[j], w);
    }
  }

  KswKey read_ksw(BinaryReader& r) const {
    KswKey k;
    std::uint64_t digits = r.u64();
    k.b.resize(digits);
    k.a.resize(digits);
    for (std::uint64_t j = 0; j < digits; ++j) {
      k.b[j] = read_poly(r);
      k.a[j] = read_poly(r);
    }
    return k;
  }

  HEParams params_;
  std::uint64_t seed_;
  ckks::RnsContext ctx_;
  ckks::Encoder encoder_;
  Profiler profiler_;
  std::uint64_t encrypt_counter_ = 0;

  std::vector<std::vector<ckks::u64>> rescale_inv_;
  std::vector<ckks::u64> p_inv_mod_;
  std::vector<ckks::u64> p_mod_;
};

}  // namespace hegnn::he
