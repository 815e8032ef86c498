// SPDX-License-Identifier: Apache-2.0
//
// Backend-generic homomorphic routines. A backend supplies primitive ops
// (add/mult/rotate/mod_switch with level-and-scale bookkeeping); this layer
// builds polynomial evaluation, the soft comparison operator, and arbitrary
// slot rotations composed from the power-of-two key set.
//
// Plaintext operands (polynomial coefficients, constants) are encoded as
// width-limited blocks: the first `width` slots carry the value, the rest are
// zero. Every polynomial therefore evaluates to exactly zero outside the
// packed block, which keeps replicated graph vectors clean across layers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/he/params.hpp"

namespace hegnn::he {

enum class PolyStrategy { kHorner, kPatersonStockmeyer };

// Degree levels consumed by poly_eval under the default Horner strategy.
inline int poly_eval_depth(int degree) { return degree; }

// Levels consumed by aprx_cmp: one for input normalization plus three per
// cubic pass (sharpen - 1 sharpening passes and the final affine-cubic step).
inline int aprx_cmp_depth(int sharpen) { return 3 * sharpen + 1; }

// Sign-shaping cubic g(x) = 1.5 x - 0.5 x^3 iterated for sharpening, and the
// final comparison polynomial (g(x) + 1) / 2 = -0.25 x^3 + 0.75 x + 0.5.
inline const std::vector<double>& sharpening_poly() {
  static const std::vector<double> g = {0.0, 1.5, 0.0, -0.5};
  return g;
}

inline const std::vector<double>& comparison_poly() {
  static const std::vector<double> p = {0.5, 0.75, 0.0, -0.25};
  return p;
}

inline std::vector<double> block_vector(double value, std::size_t width) {
  return std::vector<double>(width, value);
}

// Rotation key steps declared by default: +/- every power of two below the
// slot count. Any step composes from at most log2(slots) applications.
inline std::vector<int> default_rotation_steps(std::size_t slot_count) {
  std::vector<int> steps;
  for (std::size_t p = 1; p < slot_count; p <<= 1) {
    steps.push_back(static_cast<int>(p));
    steps.push_back(-static_cast<int>(p));
  }
  return steps;
}

// Rotation steps actually used when all packed vectors live in a leading
// block of `width` slots: +1 for the incremental diagonal walk and negative
// powers of two for block replication. Much cheaper to generate than the
// full default set.
inline std::vector<int> rotation_steps_for_block(std::size_t width, std::size_t slot_count) {
  std::vector<int> steps = {1};
  if (width < slot_count) {
    for (std::size_t p = 1; p <= width && p < slot_count; p <<= 1) {
      // rotate_by centers every request into (-S/2, S/2], so a rotation by
      // -S/2 is always served as +S/2; declare that boundary power positive.
      steps.push_back(2 * p == slot_count ? static_cast<int>(p) : -static_cast<int>(p));
    }
  }
  return steps;
}

// Left-rotate by an arbitrary step, composed from declared power-of-two keys.
// The step is first centered into (-S/2, S/2] so a short negative rotation
// does not expand into a long positive chain.
template <class B>
typename B::Ciphertext rotate_by(B& backend, const typename B::Ciphertext& ct,
                                 const typename B::KeySet& keys, long step) {
  const long s = static_cast<long>(backend.params().slot_count());
  long t = ((step % s) + s) % s;
  if (t == 0) return ct;
  if (t > s / 2) t -= s;
  const int sign = t < 0 ? -1 : 1;
  unsigned long mag = static_cast<unsigned long>(sign < 0 ? -t : t);
  typename B::Ciphertext out = ct;
  for (int bit = 0; mag != 0; ++bit, mag >>= 1) {
    if (mag & 1UL) out = backend.rotate(out, sign * (1 << bit), keys);
  }
  return out;
}

// Appends a second copy of the leading `width` slots at offset `width`:
// out = ct + rot(ct, -width). Requires the block to be clean (zero) beyond
// `width` and 2 * width slots of capacity. No level is consumed.
template <class B>
typename B::Ciphertext replicate_block(B& backend, const typename B::Ciphertext& ct,
                                       const typename B::KeySet& keys, std::size_t width) {
  if (2 * width > backend.params().slot_count()) {
    throw CapacityError("replicate_block: 2*" + std::to_string(width) +
                        " slots exceed capacity");
  }
  return backend.add(ct, rotate_by(backend, ct, keys, -static_cast<long>(width)));
}

// Prepares a width-limited block for rotations modulo `width`: after this,
// a left rotation by d < width brings slot (v+d) mod width into slot v. When
// the block already fills every slot, native rotation is the modular one.
template <class B>
typename B::Ciphertext replicate_for_rotation(B& backend, const typename B::Ciphertext& ct,
                                              const typename B::KeySet& keys,
                                              std::size_t width) {
  if (width == backend.params().slot_count()) return ct;
  return replicate_block(backend, ct, keys, width);
}

template <class B>
typename B::Ciphertext mod_switch_to(B& backend, const typename B::Ciphertext& ct,
                                     int level) {
  if (ct.level == level) return ct;
  return backend.mod_switch(ct, level);
}

// out = value - ct on the first `width` slots (negation plus plain addition;
// no level consumed).
template <class B>
typename B::Ciphertext sub_from_plain(B& backend, double value,
                                      const typename B::Ciphertext& ct,
                                      std::size_t width) {
  auto neg = backend.negate(ct);
  return backend.add_plain(neg, backend.encode(block_vector(value, width), neg.level));
}

namespace detail {

template <class B>
typename B::Ciphertext poly_eval_horner(B& backend, const std::vector<double>& coeffs,
                                        const typename B::Ciphertext& x,
                                        const typename B::KeySet& keys,
                                        std::size_t width) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  auto acc = backend.encrypt(block_vector(coeffs[degree], width), keys);
  acc = mod_switch_to(backend, acc, x.level);
  for (int j = degree - 1; j >= 0; --j) {
    acc = backend.mult(acc, mod_switch_to(backend, x, acc.level), keys);
    acc = backend.add_plain(acc, backend.encode(block_vector(coeffs[j], width), acc.level));
  }
  return acc;
}

template <class B>
typename B::Ciphertext poly_eval_ps(B& backend, const std::vector<double>& coeffs,
                                    const typename B::Ciphertext& x,
                                    const typename B::KeySet& keys, std::size_t width) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(degree + 1))));

  // Baby powers x^1..x^k via balanced products.
  std::vector<typename B::Ciphertext> pow(static_cast<std::size_t>(k) + 1);
  pow[1] = x;
  for (int i = 2; i <= k; ++i) {
    const auto& lo = pow[i / 2];
    const auto& hi = pow[i - i / 2];
    int level = std::min(lo.level, hi.level);
    pow[i] = backend.mult(mod_switch_to(backend, lo, level),
                          mod_switch_to(backend, hi, level), keys);
  }

  const int chunks = (degree + k) / k;  // ceil((degree + 1) / k)

  // Inner sums: chunk q holds coefficients c_{qk} .. c_{qk + k - 1}.
  auto chunk_value = [&](int q) {
    auto acc = backend.encrypt(block_vector(coeffs[static_cast<std::size_t>(q) * k], width),
                               keys);
    for (int j = 1; j < k; ++j) {
      std::size_t idx = static_cast<std::size_t>(q) * k + static_cast<std::size_t>(j);
      if (idx > static_cast<std::size_t>(degree)) break;
      auto term = backend.mult_plain(
          pow[j], backend.encode(block_vector(coeffs[idx], width), pow[j].level));
      int level = std::min(acc.level, term.level);
      acc = backend.add(mod_switch_to(backend, acc, level),
                        mod_switch_to(backend, term, level));
    }
    return acc;
  };

  // Horner over the giant step G = x^k.
  auto result = chunk_value(chunks - 1);
  const auto& giant = pow[k];
  for (int q = chunks - 2; q >= 0; --q) {
    int level = std::min(result.level, giant.level);
    result = backend.mult(mod_switch_to(backend, result, level),
                          mod_switch_to(backend, giant, level), keys);
    auto c = chunk_value(q);
    level = std::min(result.level, c.level);
    result = backend.add(mod_switch_to(backend, result, level),
                         mod_switch_to(backend, c, level));
  }
  return result;
}

}  // namespace detail

// Evaluates sum_j coeffs[j] * x^j slotwise. Horner consumes exactly `degree`
// levels and charges `degree` ct-ct multiplications (the leading coefficient
// enters as a fresh encryption). Paterson-Stockmeyer trades a shallower
// circuit for a different product mix; it is value-equivalent.
template <class B>
typename B::Ciphertext poly_eval(B& backend, const std::vector<double>& coeffs,
                                 const typename B::Ciphertext& x,
                                 const typename B::KeySet& keys,
                                 std::size_t width = 0,
                                 PolyStrategy strategy = PolyStrategy::kHorner) {
  if (coeffs.empty()) throw ParameterError("poly_eval: empty coefficient list");
  if (width == 0) width = backend.params().slot_count();
  const int degree = static_cast<int>(coeffs.size()) - 1;
  if (degree == 0) {
    auto acc = backend.encrypt(block_vector(coeffs[0], width), keys);
    return mod_switch_to(backend, acc, x.level);
  }
  if (x.level < poly_eval_depth(degree)) {
    throw DepthExhaustedError("poly_eval: degree " + std::to_string(degree) +
                              " needs " + std::to_string(degree) + " levels, input at level " +
                              std::to_string(x.level));
  }
  if (strategy == PolyStrategy::kPatersonStockmeyer && degree > 2) {
    return detail::poly_eval_ps(backend, coeffs, x, keys, width);
  }
  return detail::poly_eval_horner(backend, coeffs, x, keys, width);
}

// Soft comparison of scores against a threshold: approximately 1 where
// s > tau, 0 where s < tau, 0.5 at the threshold. `delta` must bound
// |s - tau| slotwise so the normalized input stays in [-1, 1]. Higher
// `sharpen` steepens the transition; each extra pass costs three levels.
template <class B>
typename B::Ciphertext aprx_cmp(B& backend, const typename B::Ciphertext& scores,
                                double tau, double delta, int sharpen,
                                const typename B::KeySet& keys, std::size_t width = 0) {
  if (delta <= 0.0) throw ParameterError("aprx_cmp: delta must be positive");
  if (sharpen < 1) throw ParameterError("aprx_cmp: sharpen must be >= 1");
  if (width == 0) width = backend.params().slot_count();
  if (scores.level < aprx_cmp_depth(sharpen)) {
    throw DepthExhaustedError("aprx_cmp: sharpen " + std::to_string(sharpen) + " needs " +
                              std::to_string(aprx_cmp_depth(sharpen)) +
                              " levels, input at level " + std::to_string(scores.level));
  }
  auto t = backend.add_plain(scores, backend.encode(block_vector(-tau, width), scores.level));
  t = backend.mult_plain(t, backend.encode(block_vector(1.0 / delta, width), t.level));
  for (int i = 0; i < sharpen - 1; ++i) {
    t = poly_eval(backend, sharpening_poly(), t, keys, width);
  }
  return poly_eval(backend, comparison_poly(), t, keys, width);
}

// Encrypted-threshold variant: tau arrives as a ciphertext broadcast across
// the block. Functionally identical to the plaintext path.
template <class B>
typename B::Ciphertext aprx_cmp(B& backend, const typename B::Ciphertext& scores,
                                const typename B::Ciphertext& tau, double delta,
                                int sharpen, const typename B::KeySet& keys,
                                std::size_t width = 0) {
  if (delta <= 0.0) throw ParameterError("aprx_cmp: delta must be positive");
  if (sharpen < 1) throw ParameterError("aprx_cmp: sharpen must be >= 1");
  if (width == 0) width = backend.params().slot_count();
  int level = std::min(scores.level, tau.level);
  if (level < aprx_cmp_depth(sharpen)) {
    throw DepthExhaustedError("aprx_cmp: not enough levels for sharpen " +
                              std::to_string(sharpen));
  }
  auto t = backend.sub(mod_switch_to(backend, scores, level),
                       mod_switch_to(backend, tau, level));
  t = backend.mult_plain(t, backend.encode(block_vector(1.0 / delta, width), t.level));
  for (int i = 0; i < sharpen - 1; ++i) {
    t = poly_eval(backend, sharpening_poly(), t, keys, width);
  }
  return poly_eval(backend, comparison_poly(), t, keys, width);
}

}  // namespace hegnn::he
