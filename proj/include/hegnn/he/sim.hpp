// SPDX-License-Identifier: Apache-2.0
//
// Exact-arithmetic oracle backend. Slot values are plain doubles and every
// operation is computed exactly, but level, scale, slot-count and key
// bookkeeping follow the same contracts as the lattice backend, and the
// profiler charges the same counters. Any divergence between the two backends
// on the same pipeline is therefore attributable to encryption noise alone.

#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/checks.hpp"
#include "hegnn/he/params.hpp"
#include "hegnn/he/profile.hpp"
#include "hegnn/he/serial.hpp"

namespace hegnn::he {

struct SimPlaintext {
  std::vector<double> slots;
  int level = 0;
  double scale = 0.0;
};

struct SimCiphertext {
  std::vector<double> slots;
  int level = 0;
  double scale = 0.0;
  std::size_t slot_count = 0;
};

struct SimKeySet {
  std::uint64_t key_id = 0;  // derived from the seed; stands in for key material
  std::set<int> steps;
};

class SimBackend {
 public:
  using Plaintext = SimPlaintext;
  using Ciphertext = SimCiphertext;
  using KeySet = SimKeySet;

  static constexpr const char* kName = "sim";

  SimBackend(HEParams params, std::uint64_t seed) : params_(std::move(params)), seed_(seed) {
    params_.validate();
  }

  const HEParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  OpProfile profile() const { return profiler_.snapshot(); }
  void reset_profile() { profiler_.reset(); }

  KeySet keygen(const std::vector<int>& rotation_steps) {
    KeySet ks;
    // splitmix64 of the seed; deterministic stand-in for real key material.
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    ks.key_id = z ^ (z >> 31);
    ks.steps.insert(rotation_steps.begin(), rotation_steps.end());
    return ks;
  }

  Plaintext encode(const std::vector<double>& values, int level) const {
    check_level_exists(level, "encode");
    detail::check_capacity(values.size(), params_.slot_count(), "encode");
    Plaintext pt;
    pt.slots = values;
    pt.slots.resize(params_.slot_count(), 0.0);
    pt.level = level;
    pt.scale = params_.scale();
    return pt;
  }

  std::vector<double> decode(const Plaintext& pt) const { return pt.slots; }

  Ciphertext encrypt(const std::vector<double>& values, const KeySet&) {
    detail::check_capacity(values.size(), params_.slot_count(), "encrypt");
    Ciphertext ct;
    ct.slots = values;
    ct.slots.resize(params_.slot_count(), 0.0);
    ct.level = params_.levels();
    ct.scale = params_.scale();
    ct.slot_count = params_.slot_count();
    return ct;
  }

  std::vector<double> decrypt(const Ciphertext& ct, const KeySet&) const {
    return ct.slots;
  }

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) {
    detail::check_binary_operands(a, b, "add");
    detail::check_slot_count(a, b, "add");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] += b.slots[i];
    profiler_.count_add();
    return out;
  }

  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) {
    detail::check_binary_operands(a, b, "sub");
    detail::check_slot_count(a, b, "sub");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] -= b.slots[i];
    profiler_.count_add();
    return out;
  }

  Ciphertext negate(const Ciphertext& a) {
    Ciphertext out = a;
    for (auto& v : out.slots) v = -v;
    return out;
  }

  Ciphertext add_plain(const Ciphertext& a, const Plaintext& p) {
    detail::check_binary_operands(a, p, "add_plain");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] += p.slots[i];
    profiler_.count_add_plain();
    return out;
  }

  // Relinearized and rescaled ct-ct product; one level consumed.
  Ciphertext mult(const Ciphertext& a, const Ciphertext& b, const KeySet&) {
    detail::check_binary_operands(a, b, "mult");
    detail::check_slot_count(a, b, "mult");
    detail::check_mult_level(a, "mult");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] *= b.slots[i];
    out.level = a.level - 1;
    out.scale = params_.scale();
    profiler_.count_mult_ct();
    profiler_.count_relinearize();
    profiler_.count_rescale();
    observe(out);
    return out;
  }

  // Rescaled ct-pt product; one level consumed.
  Ciphertext mult_plain(const Ciphertext& a, const Plaintext& p) {
    detail::check_binary_operands(a, p, "mult_plain");
    detail::check_mult_level(a, "mult_plain");
    Ciphertext out = a;
    for (std::size_t i = 0; i < out.slots.size(); ++i) out.slots[i] *= p.slots[i];
    out.level = a.level - 1;
    out.scale = params_.scale();
    profiler_.count_mult_plain();
    profiler_.count_rescale();
    observe(out);
    return out;
  }

  // Cyclic left rotation by a declared step.
  Ciphertext rotate(const Ciphertext& a, int step, const KeySet& keys) {
    if (step == 0) return a;
    if (!keys.steps.count(step)) {
      throw KeyError("rotate: no key for step " + std::to_string(step));
    }
    const std::size_t s = a.slots.size();
    const std::size_t k = static_cast<std::size_t>(((step % static_cast<int>(s)) +
                                                    static_cast<int>(s))) % s;
    Ciphertext out = a;
    for (std::size_t i = 0; i < s; ++i) out.slots[i] = a.slots[(i + k) % s];
    profiler_.count_rotate();
    return out;
  }

  Ciphertext mod_switch(const Ciphertext& a, int target_level) {
    detail::check_mod_switch(a.level, target_level, "mod_switch");
    Ciphertext out = a;
    out.level = target_level;
    observe(out);
    return out;
  }

  // --- serialization ---

  void serialize(const Ciphertext& ct, BinaryWriter& w) const {
    write_header(w, BlobKind::kSimCiphertext);
    w.u32(static_cast<std::uint32_t>(params_.ring_degree));
    w.i64(ct.level);
    w.f64(ct.scale);
    w.u64(ct.slot_count);
    w.f64_array(ct.slots);
  }

  Ciphertext deserialize_ciphertext(BinaryReader& r) const {
    if (read_header(r) != BlobKind::kSimCiphertext) {
      throw ParseError("container is not a sim ciphertext");
    }
    if (r.u32() != params_.ring_degree) throw ParseError("ring degree mismatch");
    Ciphertext ct;
    ct.level = static_cast<int>(r.i64());
    ct.scale = r.f64();
    ct.slot_count = r.u64();
    ct.slots = r.f64_array();
    return ct;
  }

  void serialize(const KeySet& ks, BinaryWriter& w) const {
    write_header(w, BlobKind::kSimKeySet);
    w.u32(static_cast<std::uint32_t>(params_.ring_degree));
    w.u64(ks.key_id);
    std::vector<std::uint64_t> steps;
    for (int s : ks.steps) steps.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(s)));
    w.u64_array(steps);
  }

  KeySet deserialize_keyset(BinaryReader& r) const {
    if (read_header(r) != BlobKind::kSimKeySet) {
      throw ParseError("container is not a sim key set");
    }
    if (r.u32() != params_.ring_degree) throw ParseError("ring degree mismatch");
    KeySet ks;
    ks.key_id = r.u64();
    for (auto v : r.u64_array()) ks.steps.insert(static_cast<int>(static_cast<std::int64_t>(v)));
    return ks;
  }

 private:
  void check_level_exists(int level, const char* what) const {
    if (level < 0 || level > params_.levels()) {
      throw ParameterError(std::string(what) + ": level " + std::to_string(level) +
                           " outside chain [0, " + std::to_string(params_.levels()) + "]");
    }
  }

  void observe(const Ciphertext& ct) { profiler_.observe_depth(params_.levels() - ct.level); }

  HEParams params_;
  std::uint64_t seed_;
  Profiler profiler_;
};

}  // namespace hegnn::he
