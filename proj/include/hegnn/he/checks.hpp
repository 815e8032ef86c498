// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hegnn/errors.hpp"

namespace hegnn::he::detail {

// Relative scale tolerance for binary operations. Both backends normalize the
// tracked scale to 2^scale_bits after every rescale, so in-contract pipelines
// always match exactly; the tolerance exists to flag genuinely mixed scales.
inline constexpr double kScaleRelTol = 9.5367431640625e-07;  // 2^-20

template <class A, class B>
void check_binary_operands(const A& a, const B& b, const char* what) {
  if (a.level != b.level) {
    throw AlignmentError(std::string(what) + ": level mismatch (" +
                         std::to_string(a.level) + " vs " + std::to_string(b.level) + ")");
  }
  double rel = std::abs(a.scale - b.scale) / std::max(a.scale, b.scale);
  if (!(rel <= kScaleRelTol)) {
    throw AlignmentError(std::string(what) + ": scale mismatch");
  }
}

template <class A, class B>
void check_slot_count(const A& a, const B& b, const char* what) {
  if (a.slot_count != b.slot_count) {
    throw AlignmentError(std::string(what) + ": slot_count mismatch");
  }
}

template <class A>
void check_mult_level(const A& a, const char* what) {
  if (a.level < 1) {
    throw DepthExhaustedError(std::string(what) +
                              ": no level left to rescale (level 0)");
  }
}

inline void check_mod_switch(int from, int to, const char* what) {
  if (to < 0 || to > from) {
    throw DepthExhaustedError(std::string(what) + ": cannot switch level " +
                              std::to_string(from) + " -> " + std::to_string(to));
  }
}

inline void check_capacity(std::size_t n, std::size_t slots, const char* what) {
  if (n > slots) {
    throw CapacityError(std::string(what) + ": " + std::to_string(n) +
                        " values exceed " + std::to_string(slots) + " slots");
  }
}

}  // namespace hegnn::he::detail
