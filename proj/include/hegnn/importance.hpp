// SPDX-License-Identifier: Apache-2.0
//
// Encrypted node-importance scoring and mask generation.
//
// Scores are node degrees, computed homomorphically from the diagonal-packed
// adjacency. A strictly decreasing threshold list [tau_1 > ... > tau_m]
// partitions nodes into m importance bands plus a prune set: band i holds
// nodes with tau_i <= score < tau_{i-1} (tau_0 = +inf), pruned nodes fall
// below tau_m. Soft masks come from one comparison per threshold, reused
// across adjacent bands; the top band needs no upper comparison.

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/graph/encrypt.hpp"
#include "hegnn/graph/types.hpp"
#include "hegnn/he/ops.hpp"

namespace hegnn {

struct Thresholds {
  std::vector<double> tau;  // strictly decreasing

  std::size_t m() const { return tau.size(); }

  void validate() const {
    if (tau.empty()) throw ParameterError("threshold list is empty");
    for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
      if (!(tau[i] > tau[i + 1])) {
        throw ParameterError("thresholds must be strictly decreasing: tau[" +
                             std::to_string(i) + "] = " + std::to_string(tau[i]) +
                             " !> tau[" + std::to_string(i + 1) + "] = " +
                             std::to_string(tau[i + 1]));
      }
    }
  }
};

template <class Backend>
struct ScoreVector {
  typename Backend::Ciphertext s_tilde;
  std::size_t n = 0;
};

template <class Backend>
struct MaskSet {
  typename Backend::Ciphertext m0;                 // prune mask
  std::vector<typename Backend::Ciphertext> levels;  // band masks M_1..M_m
  std::size_t m = 0;
};

// Exact hard-threshold reference (and experiment-mode mask source).
struct PlainMasks {
  std::vector<double> m0;
  std::vector<std::vector<double>> levels;
  std::size_t m = 0;
};

enum class OnesMode {
  kEncrypted,  // ones vector encrypted; aggregation uses ct-ct products
  kPlain,      // ones vector encoded as plaintext; ct-pt products
};

// Degree of every node, slot-aligned with the graph packing: slot v of the
// result carries sum_u A[v,u]. One multiplicative level is consumed.
template <class Backend>
ScoreVector<Backend> encrypted_degree(Backend& backend, const EncGraph<Backend>& g,
                                      const typename Backend::KeySet& keys,
                                      OnesMode mode = OnesMode::kEncrypted) {
  if (g.adj_diagonals.empty()) throw ParameterError("encrypted_degree: empty graph");
  ScoreVector<Backend> out;
  out.n = g.n;

  if (mode == OnesMode::kEncrypted) {
    auto ones = backend.encrypt(he::block_vector(1.0, g.n), keys);
    auto rotated = he::replicate_for_rotation(backend, ones, keys, g.n);
    for (std::size_t d = 0; d < g.n; ++d) {
      auto term = backend.mult(g.adj_diagonals[d], he::mod_switch_to(backend, rotated, g.adj_diagonals[d].level), keys);
      if (d == 0) {
        out.s_tilde = term;
      } else {
        out.s_tilde = backend.add(out.s_tilde, term);
      }
      if (d + 1 < g.n) rotated = backend.rotate(rotated, 1, keys);
    }
  } else {
    for (std::size_t d = 0; d < g.n; ++d) {
      auto pt = backend.encode(he::block_vector(1.0, g.n), g.adj_diagonals[d].level);
      auto term = backend.mult_plain(g.adj_diagonals[d], pt);
      if (d == 0) {
        out.s_tilde = term;
      } else {
        out.s_tilde = backend.add(out.s_tilde, term);
      }
    }
  }
  return out;
}

// Soft masks from one comparison per threshold.
//   M_0 = 1 - c_m            (prune: score below the lowest threshold)
//   M_1 = c_1                (top band; the tau_0 = +inf comparison is the
//                             constant 0, so its factor is identically 1)
//   M_i = c_i * (1 - c_{i-1})  for i >= 2
// where c_i = aprx_cmp(s, tau_i). All m+1 masks are returned level-aligned.
template <class Backend>
MaskSet<Backend> generate_masks(Backend& backend, const ScoreVector<Backend>& s,
                                const Thresholds& tau, double delta, int sharpen,
                                const typename Backend::KeySet& keys) {
  tau.validate();
  const std::size_t m = tau.m();
  const std::size_t n = s.n;

  std::vector<typename Backend::Ciphertext> cmp;
  cmp.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    cmp.push_back(he::aprx_cmp(backend, s.s_tilde, tau.tau[i], delta, sharpen, keys, n));
  }

  MaskSet<Backend> out;
  out.m = m;
  out.m0 = he::sub_from_plain(backend, 1.0, cmp[m - 1], n);
  out.levels.push_back(cmp[0]);
  for (std::size_t i = 1; i < m; ++i) {
    auto upper_gap = he::sub_from_plain(backend, 1.0, cmp[i - 1], n);
    out.levels.push_back(backend.mult(cmp[i], upper_gap, keys));
  }

  // Bands i >= 2 sit one level deeper than M_0 / M_1; align everything.
  int lowest = out.m0.level;
  for (const auto& lvl : out.levels) lowest = std::min(lowest, lvl.level);
  out.m0 = he::mod_switch_to(backend, out.m0, lowest);
  for (auto& lvl : out.levels) lvl = he::mod_switch_to(backend, lvl, lowest);
  return out;
}

// Hard-threshold reference masks. Ties resolve upward: score >= tau_i joins
// band i or better.
inline PlainMasks oracle_masks(const PlainGraph& g, const Thresholds& tau) {
  tau.validate();
  const std::size_t m = tau.m();
  const auto deg = g.degrees();

  PlainMasks out;
  out.m = m;
  out.m0.assign(g.n, 0.0);
  out.levels.assign(m, std::vector<double>(g.n, 0.0));
  for (std::size_t v = 0; v < g.n; ++v) {
    if (deg[v] < tau.tau[m - 1]) {
      out.m0[v] = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double upper = i == 0 ? std::numeric_limits<double>::infinity() : tau.tau[i - 1];
      if (deg[v] >= tau.tau[i] && deg[v] < upper) {
        out.levels[i][v] = 1.0;
        break;
      }
    }
  }
  return out;
}

// Threshold realizing a requested pruning ratio, taken from the plaintext
// degree distribution (an experiment-harness convenience, not a protocol
// step). The cut falls midway between the k-th and (k+1)-th smallest degree;
// ties can only push the pruned count above k, never below, so the pruned
// set grows monotonically with the ratio.
inline double threshold_for_ratio(const PlainGraph& g, double ratio) {
  if (ratio < 0.0 || ratio >= 1.0) throw ParameterError("pruning ratio must be in [0, 1)");
  if (g.n == 0) throw ParameterError("pruning ratio on an empty graph");
  auto deg = g.degrees();
  std::sort(deg.begin(), deg.end());
  const std::size_t k = static_cast<std::size_t>(ratio * static_cast<double>(g.n));
  if (k == 0) return deg.front() - 1.0;  // prune nothing
  const double lo = deg[k - 1];
  // Cut midway to the next distinct degree so the rule is scale-free; a tie
  // at the cut point pushes the whole tied group below the threshold, so the
  // pruned count can exceed k but never falls short.
  for (std::size_t i = k; i < g.n; ++i) {
    if (deg[i] > lo) return 0.5 * (lo + deg[i]);
  }
  return lo + 0.5;  // nothing above the cut survives
}

// Full threshold vector for an m-band run at a requested pruning ratio: the
// prune cut comes from threshold_for_ratio, the m-1 band cuts fall at evenly
// spaced quantiles of the retained degree distribution, each placed midway to
// the next distinct degree. Degenerate distributions (heavy ties, fewer
// retained nodes than bands) are resolved by forcing strict descent with a
// small scale-relative step, which may leave some bands empty.
inline Thresholds thresholds_for_ratio(const PlainGraph& g, double ratio, std::size_t m) {
  if (m == 0) throw ParameterError("band count must be >= 1");
  Thresholds t;
  t.tau.assign(m, 0.0);
  t.tau[m - 1] = threshold_for_ratio(g, ratio);
  if (m > 1) {
    std::vector<double> rd;
    for (double d : g.degrees()) {
      if (d >= t.tau[m - 1]) rd.push_back(d);
    }
    std::sort(rd.begin(), rd.end());
    const std::size_t r = rd.size();
    const double step = rd.empty() ? 0.5
                                   : std::max(1e-9, 1e-3 * std::max(1.0, rd.back() - rd.front()));
    for (std::size_t i = m - 1; i-- > 0;) {
      // Retained nodes below this cut: the lower m-1-i of m equal bands.
      const std::size_t q = r == 0 ? 0 : (r * (m - 1 - i)) / m;
      double cut = t.tau[i + 1];
      if (q > 0 && q < r) {
        cut = rd[q - 1] + step;  // tie fallback: nudge past the tied group
        for (std::size_t j = q; j < r; ++j) {
          if (rd[j] > rd[q - 1]) {
            cut = 0.5 * (rd[q - 1] + rd[j]);
            break;
          }
        }
      }
      t.tau[i] = std::max(cut, t.tau[i + 1] + step);
    }
  }
  t.validate();
  return t;
}

}  // namespace hegnn
