// SPDX-License-Identifier: Apache-2.0
//
// Compaction-mode inference: the cost-accounting counterpart to the packed
// protocol pipeline. Nodes and edges are held as individual scalar
// ciphertexts, pruning physically removes nodes and their edges, and each
// node is activated with exactly the polynomial its score band calls for --
// no mask multiplications. Band membership is taken from the plaintext
// degrees, so this mode measures what graph compaction saves in homomorphic
// operations; it does not hide the surviving topology the way protocol mode
// does.
//
// For a fair comparison the importance-mask stage (scoring plus soft
// comparisons) still runs in packed form with the same circuit as protocol
// mode, since a deployment would have to pay for it either way. BFG skips it
// entirely, exactly as in protocol mode.

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hegnn/engine/engine.hpp"
#include "hegnn/engine/psets.hpp"
#include "hegnn/errors.hpp"
#include "hegnn/graph/encrypt.hpp"
#include "hegnn/graph/types.hpp"
#include "hegnn/he/ops.hpp"
#include "hegnn/he/profile.hpp"
#include "hegnn/importance.hpp"

namespace hegnn {

template <class Backend>
struct CompactResult {
  std::vector<std::size_t> nodes;  // retained node ids, ascending
  std::vector<std::vector<typename Backend::Ciphertext>> logits;  // [retained][out col]
  he::OpProfile profile;
  std::vector<StageLevel> trace;
  std::vector<StageProfile> stage_profiles;
};

namespace detail {

// Per-node activation band from the plaintext degrees: 0..m-1 for band
// members, -1 for pruned nodes. AAO folds pruned nodes into the bottom band
// (it is open below); PO and BFG use one uniform polynomial, reported as
// band 0.
inline std::vector<int> band_assignment(const PlainGraph& g, const EngineConfig& cfg) {
  std::vector<int> band(g.n, 0);
  if (!cfg.adaptive()) {
    if (cfg.prunes()) {  // PO: drop below the lowest threshold
      const PlainMasks pm = oracle_masks(g, cfg.tau);
      for (std::size_t v = 0; v < g.n; ++v) {
        if (pm.m0[v] == 1.0) band[v] = -1;
      }
    }
    return band;
  }
  const PlainMasks pm = oracle_masks(g, cfg.tau);
  const int m = static_cast<int>(pm.m);
  for (std::size_t v = 0; v < g.n; ++v) {
    if (pm.m0[v] == 1.0) {
      band[v] = cfg.prunes() ? -1 : m - 1;
      continue;
    }
    for (int i = 0; i < m; ++i) {
      if (pm.levels[i][v] == 1.0) {
        band[v] = i;
        break;
      }
    }
  }
  return band;
}

}  // namespace detail

// Runs the compaction pipeline end to end. The plaintext graph is required
// because physical pruning and band assignment happen before encryption.
template <class Backend>
CompactResult<Backend> run_compact_inference(Backend& backend, const PlainGraph& g,
                                             const ModelWeights& w, const EngineConfig& cfg,
                                             const typename Backend::KeySet& keys) {
  if (cfg.mode != EngineMode::kCompaction) {
    throw ConfigError("run_compact_inference requires EngineMode::kCompaction");
  }
  g.validate();
  w.validate();
  cfg.validate(g.n);
  if (w.input_dim() != g.feature_dim()) {
    throw ModelError("model expects input dim " + std::to_string(w.input_dim()) +
                     " but the graph has " + std::to_string(g.feature_dim()) +
                     " feature columns");
  }
  check_depth_budget(cfg, w.layer_count(), backend.params().levels());

  const int fresh = backend.params().levels();
  const he::OpProfile run_start = backend.profile();
  CompactResult<Backend> result;
  he::OpProfile stage_start = run_start;
  auto close_stage = [&](const std::string& stage, int level) {
    const he::OpProfile now = backend.profile();
    result.trace.push_back({stage, level});
    result.stage_profiles.push_back({stage, now - stage_start});
    stage_start = now;
  };

  // Packed mask stage, for cost parity with protocol mode. The resulting
  // ciphertexts are not consumed: band membership below is plaintext-side.
  if (cfg.uses_masks()) {
    EncGraph<Backend> packed = encrypt_graph(backend, g, keys);
    auto masks = detail::build_masks(backend, packed, cfg, keys);
    close_stage("masks", masks.bands.front().level);
  }

  const std::vector<int> band = detail::band_assignment(g, cfg);
  result.nodes.clear();
  for (std::size_t v = 0; v < g.n; ++v) {
    if (band[v] >= 0) result.nodes.push_back(v);
  }
  const std::size_t r = result.nodes.size();
  std::vector<std::size_t> slot_of(g.n, g.n);  // node id -> retained index
  for (std::size_t i = 0; i < r; ++i) slot_of[result.nodes[i]] = i;

  if (r == 0) {
    result.profile = backend.profile() - run_start;
    return result;
  }

  // Scalar ciphertexts: one per retained node and feature, one per directed
  // edge between retained nodes.
  std::vector<std::vector<typename Backend::Ciphertext>> h(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t v = result.nodes[i];
    for (std::size_t j = 0; j < g.feature_dim(); ++j) {
      h[i].push_back(backend.encrypt({g.features[v][j]}, keys));
    }
  }
  struct Edge {
    std::size_t dst;  // retained index of the aggregating node
    std::size_t src;  // retained index of the neighbour
    typename Backend::Ciphertext weight;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t v = result.nodes[i];
    for (std::size_t k = 0; k < r; ++k) {
      const std::size_t u = result.nodes[k];
      if (g.adjacency[v][u] != 0.0) {
        edges.push_back({i, k, backend.encrypt({g.adjacency[v][u]}, keys)});
      }
    }
  }

  const std::vector<ActPoly> polys = cfg.active_polys();
  const int d_max = polys.front().degree();

  int h_level = fresh;
  for (std::size_t l = 0; l < w.layer_count(); ++l) {
    const std::string tag = "layer" + std::to_string(l + 1);
    const LayerWeights& lw = w.layers[l];
    const std::size_t d_in = lw.w1.size();
    const std::size_t d_out = lw.w1[0].size();

    // Neighbour aggregation: one ct-ct product per directed edge and input
    // column. Nodes with no surviving neighbours aggregate to zero.
    const int agg_level = std::min(fresh, h_level) - 1;
    std::vector<std::vector<typename Backend::Ciphertext>> agg(r);
    std::vector<std::vector<bool>> has(r, std::vector<bool>(d_in, false));
    for (auto& row : agg) row.resize(d_in);
    for (const Edge& e : edges) {
      for (std::size_t j = 0; j < d_in; ++j) {
        const int lvl = std::min(e.weight.level, h[e.src][j].level);
        auto term = backend.mult(he::mod_switch_to(backend, e.weight, lvl),
                                 he::mod_switch_to(backend, h[e.src][j], lvl), keys);
        if (has[e.dst][j]) {
          agg[e.dst][j] = backend.add(agg[e.dst][j], term);
        } else {
          agg[e.dst][j] = std::move(term);
          has[e.dst][j] = true;
        }
      }
    }
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < d_in; ++j) {
        if (!has[i][j]) {
          auto zero = backend.encrypt({0.0}, keys);
          agg[i][j] = he::mod_switch_to(backend, zero, agg_level);
        }
      }
    }
    close_stage(tag + "/aggregate", agg_level);

    // Plaintext weight mixing and bias.
    std::vector<std::vector<typename Backend::Ciphertext>> z(r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t k = 0; k < d_out; ++k) {
        typename Backend::Ciphertext nb;
        for (std::size_t j = 0; j < d_in; ++j) {
          auto term = backend.mult_plain(
              agg[i][j], backend.encode({lw.w1[j][k]}, agg[i][j].level));
          nb = j == 0 ? term : backend.add(nb, term);
        }
        typename Backend::Ciphertext self;
        for (std::size_t j = 0; j < d_in; ++j) {
          auto term = backend.mult_plain(
              h[i][j], backend.encode({lw.w2[j][k]}, h[i][j].level));
          self = j == 0 ? term : backend.add(self, term);
        }
        const int lvl = std::min(nb.level, self.level);
        auto zk = backend.add(he::mod_switch_to(backend, nb, lvl),
                              he::mod_switch_to(backend, self, lvl));
        zk = backend.add_plain(zk, backend.encode({lw.b[k]}, zk.level));
        z[i].push_back(std::move(zk));
      }
    }
    const int z_level = z[0][0].level;
    close_stage(tag + "/combine", z_level);

    if (l + 1 < w.layer_count()) {
      // Per-node activation at the band's own degree; all outputs are then
      // aligned to the deepest band so the next layer sees one level.
      const int next_level = z_level - d_max;
      for (std::size_t i = 0; i < r; ++i) {
        const ActPoly& p = cfg.adaptive() ? polys[static_cast<std::size_t>(
                                                band[result.nodes[i]])]
                                          : polys.front();
        h[i].clear();
        for (std::size_t k = 0; k < d_out; ++k) {
          auto a = he::poly_eval(backend, p.coeffs, z[i][k], keys, 1, cfg.strategy);
          h[i].push_back(he::mod_switch_to(backend, a, next_level));
        }
      }
      h_level = next_level;
      close_stage(tag + "/activate", h_level);
    } else {
      result.logits = std::move(z);
      h_level = z_level;
    }
  }
  result.trace.push_back({"logits", h_level});

  result.profile = backend.profile() - run_start;
  return result;
}

// Assembles the full n x d logit matrix; pruned nodes decode as zero rows.
template <class Backend>
Matrix decrypt_compact_logits(const Backend& backend, const CompactResult<Backend>& r,
                              std::size_t n, std::size_t out_dim,
                              const typename Backend::KeySet& keys) {
  Matrix out(n, std::vector<double>(out_dim, 0.0));
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    for (std::size_t k = 0; k < out_dim && k < r.logits[i].size(); ++k) {
      out[r.nodes[i]][k] = backend.decrypt(r.logits[i][k], keys)[0];
    }
  }
  return out;
}

}  // namespace hegnn
