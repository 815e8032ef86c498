// SPDX-License-Identifier: Apache-2.0
//
// Plaintext mirror of the protocol-mode pipeline. Every stage repeats the
// engine's arithmetic in the same operation order on plain doubles, so on the
// exact-arithmetic backend the two produce identical values slot for slot --
// not merely close ones. That makes this the oracle for pipeline tests, and
// (with hard masks) the accuracy reference for threshold/band sweeps.
//
// Anything changed in the engine's value path must be changed here in
// lockstep; the equality tests exist to catch drift.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hegnn/engine/engine.hpp"
#include "hegnn/errors.hpp"
#include "hegnn/graph/types.hpp"
#include "hegnn/importance.hpp"

namespace hegnn {

struct PlainDesignResult {
  Matrix logits;                           // n x out_dim
  std::vector<double> scores;              // degree-score mirror; empty if unused
  std::vector<double> keep;                // empty when the variant never prunes
  std::vector<std::vector<double>> bands;  // per-band mask values
};

namespace plain {

using Vec = std::vector<double>;

inline Vec poly_horner(const std::vector<double>& coeffs, const Vec& x) {
  const std::size_t d = coeffs.size() - 1;
  Vec acc(x.size(), coeffs[d]);
  for (std::size_t j = d; j-- > 0;) {
    for (std::size_t v = 0; v < x.size(); ++v) acc[v] = acc[v] * x[v] + coeffs[j];
  }
  return acc;
}

inline Vec poly_ps(const std::vector<double>& coeffs, const Vec& x) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(degree + 1))));

  std::vector<Vec> pow(static_cast<std::size_t>(k) + 1);
  pow[1] = x;
  for (int i = 2; i <= k; ++i) {
    const Vec& lo = pow[i / 2];
    const Vec& hi = pow[i - i / 2];
    Vec p(x.size());
    for (std::size_t v = 0; v < x.size(); ++v) p[v] = lo[v] * hi[v];
    pow[i] = std::move(p);
  }

  const int chunks = (degree + k) / k;
  auto chunk_value = [&](int q) {
    Vec acc(x.size(), coeffs[static_cast<std::size_t>(q) * k]);
    for (int j = 1; j < k; ++j) {
      const std::size_t idx = static_cast<std::size_t>(q) * k + static_cast<std::size_t>(j);
      if (idx > static_cast<std::size_t>(degree)) break;
      for (std::size_t v = 0; v < x.size(); ++v) acc[v] += pow[j][v] * coeffs[idx];
    }
    return acc;
  };

  Vec result = chunk_value(chunks - 1);
  const Vec& giant = pow[k];
  for (int q = chunks - 2; q >= 0; --q) {
    for (std::size_t v = 0; v < x.size(); ++v) result[v] *= giant[v];
    const Vec c = chunk_value(q);
    for (std::size_t v = 0; v < x.size(); ++v) result[v] += c[v];
  }
  return result;
}

inline Vec poly_eval(const std::vector<double>& coeffs, const Vec& x,
                     he::PolyStrategy strategy) {
  if (coeffs.empty()) throw ParameterError("poly_eval: empty coefficient list");
  const int degree = static_cast<int>(coeffs.size()) - 1;
  if (degree == 0) return Vec(x.size(), coeffs[0]);
  if (strategy == he::PolyStrategy::kPatersonStockmeyer && degree > 2) {
    return poly_ps(coeffs, x);
  }
  return poly_horner(coeffs, x);
}

inline Vec soft_cmp(const Vec& s, double tau, double delta, int sharpen) {
  // The comparison circuit always evaluates its cubics by Horner -- its level
  // ladder is pinned independent of the activation strategy -- so the mirror
  // must too.
  Vec t(s.size());
  for (std::size_t v = 0; v < s.size(); ++v) t[v] = (s[v] + -tau) * (1.0 / delta);
  for (int i = 0; i < sharpen - 1; ++i) t = poly_horner(he::sharpening_poly(), t);
  return poly_horner(he::comparison_poly(), t);
}

inline Vec one_minus(const Vec& c) {
  Vec out(c.size());
  for (std::size_t v = 0; v < c.size(); ++v) out[v] = -c[v] + 1.0;
  return out;
}

}  // namespace plain

// Protocol-pipeline mirror; see the header comment. cfg.mode is ignored --
// this mirrors the packed pipeline regardless.
inline PlainDesignResult forward_design_plain(const PlainGraph& g, const ModelWeights& w,
                                              const EngineConfig& cfg) {
  using plain::Vec;
  g.validate();
  w.validate();
  cfg.validate(g.n);
  if (w.input_dim() != g.feature_dim()) {
    throw ModelError("model expects input dim " + std::to_string(w.input_dim()) +
                     " but the graph has " + std::to_string(g.feature_dim()));
  }
  const std::size_t n = g.n;
  const std::size_t m = cfg.uses_masks() ? cfg.tau.m() : 0;

  // Diagonal-packed adjacency, as encrypt_graph lays it out.
  std::vector<Vec> diag(n, Vec(n, 0.0));
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t v = 0; v < n; ++v) diag[d][v] = g.adjacency[v][(v + d) % n];
  }

  PlainDesignResult out;

  // --- masks ---------------------------------------------------------------
  std::vector<Vec> bands;
  Vec keep;
  bool have_keep = false;
  if (cfg.uses_masks()) {
    if (cfg.mask_source == MaskSource::kOracle) {
      const PlainMasks pm = cfg.oracle ? *cfg.oracle : oracle_masks(g, cfg.tau);
      if (cfg.prunes()) {
        keep.assign(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) keep[v] = 1.0 - pm.m0[v];
        have_keep = true;
      }
      if (cfg.adaptive()) {
        for (std::size_t i = 0; i < m; ++i) {
          Vec band = pm.levels[i];
          if (cfg.variant == Variant::kAAO && i + 1 == m) {
            for (std::size_t v = 0; v < n; ++v) band[v] += pm.m0[v];
          }
          bands.push_back(std::move(band));
        }
      } else {  // PO
        Vec band(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) band[v] = 1.0 - pm.m0[v];
        bands.push_back(std::move(band));
      }
    } else if (cfg.variant == Variant::kAAO && m == 1) {
      bands.emplace_back(n, 1.0);
    } else {
      // Degree scores in the engine's summation order.
      Vec s(n, 0.0);
      for (std::size_t d = 0; d < n; ++d) {
        for (std::size_t v = 0; v < n; ++v) s[v] += diag[d][v] * 1.0;
      }
      out.scores = s;
      const double delta = cfg.effective_delta(n);

      if (cfg.variant == Variant::kPO) {
        keep = plain::soft_cmp(s, cfg.tau.tau[m - 1], delta, cfg.sharpen);
        have_keep = true;
        bands.push_back(keep);
      } else {
        const std::size_t cmp_count = cfg.variant == Variant::kAAO ? m - 1 : m;
        std::vector<Vec> cmp;
        for (std::size_t i = 0; i < cmp_count; ++i) {
          cmp.push_back(plain::soft_cmp(s, cfg.tau.tau[i], delta, cfg.sharpen));
        }
        if (cfg.variant == Variant::kFF) {
          keep = cmp[m - 1];
          have_keep = true;
        }
        bands.push_back(cmp[0]);
        for (std::size_t i = 1; i < m; ++i) {
          Vec upper_gap = plain::one_minus(cmp[i - 1]);
          if (cfg.variant == Variant::kAAO && i + 1 == m) {
            bands.push_back(std::move(upper_gap));
          } else {
            Vec band(n);
            for (std::size_t v = 0; v < n; ++v) band[v] = cmp[i][v] * upper_gap[v];
            bands.push_back(std::move(band));
          }
        }
      }
    }
  }

  // --- pruning ---------------------------------------------------------------
  std::vector<Vec> x(g.feature_dim(), Vec(n, 0.0));
  for (std::size_t j = 0; j < g.feature_dim(); ++j) {
    for (std::size_t v = 0; v < n; ++v) x[j][v] = g.features[v][j];
  }
  if (cfg.prunes()) {
    for (auto& col : x) {
      for (std::size_t v = 0; v < n; ++v) col[v] = col[v] * keep[v];
    }
    for (std::size_t d = 0; d < n; ++d) {
      for (std::size_t v = 0; v < n; ++v) {
        diag[d][v] = (diag[d][v] * keep[v]) * keep[(v + d) % n];
      }
    }
  }

  // --- layers ----------------------------------------------------------------
  const std::vector<ActPoly> polys = cfg.active_polys();
  std::vector<Vec> h = std::move(x);
  for (std::size_t l = 0; l < w.layer_count(); ++l) {
    const LayerWeights& lw = w.layers[l];
    const std::size_t d_in = lw.w1.size();
    const std::size_t d_out = lw.w1[0].size();

    std::vector<Vec> agg(d_in, Vec(n, 0.0));
    for (std::size_t j = 0; j < d_in; ++j) {
      for (std::size_t d = 0; d < n; ++d) {
        for (std::size_t v = 0; v < n; ++v) {
          agg[j][v] += diag[d][v] * h[j][(v + d) % n];
        }
      }
    }

    std::vector<Vec> z(d_out, Vec(n, 0.0));
    for (std::size_t k = 0; k < d_out; ++k) {
      Vec nb(n, 0.0), self(n, 0.0);
      for (std::size_t j = 0; j < d_in; ++j) {
        for (std::size_t v = 0; v < n; ++v) nb[v] += agg[j][v] * lw.w1[j][k];
      }
      for (std::size_t j = 0; j < d_in; ++j) {
        for (std::size_t v = 0; v < n; ++v) self[v] += h[j][v] * lw.w2[j][k];
      }
      for (std::size_t v = 0; v < n; ++v) {
        double zv = nb[v] + self[v];
        zv += cfg.prunes() ? keep[v] * lw.b[k] : lw.b[k];
        z[k][v] = zv;
      }
    }

    if (l + 1 < w.layer_count()) {
      std::vector<Vec> next(d_out);
      for (std::size_t k = 0; k < d_out; ++k) {
        if (cfg.uses_masks()) {
          std::vector<Vec> branches;
          for (const auto& p : polys) branches.push_back(plain::poly_eval(p.coeffs, z[k], cfg.strategy));
          Vec acc(n, 0.0);
          for (std::size_t i = 0; i < branches.size(); ++i) {
            for (std::size_t v = 0; v < n; ++v) acc[v] += bands[i][v] * branches[i][v];
          }
          next[k] = std::move(acc);
        } else {
          next[k] = plain::poly_eval(polys.front().coeffs, z[k], cfg.strategy);
        }
      }
      h = std::move(next);
    } else {
      h = std::move(z);
    }
  }

  out.logits.assign(n, std::vector<double>(h.size(), 0.0));
  for (std::size_t k = 0; k < h.size(); ++k) {
    for (std::size_t v = 0; v < n; ++v) out.logits[v][k] = h[k][v];
  }
  if (have_keep) out.keep = std::move(keep);
  out.bands.clear();
  for (auto& b : bands) out.bands.push_back(std::move(b));
  return out;
}

}  // namespace hegnn
