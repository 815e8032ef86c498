// SPDX-License-Identifier: Apache-2.0
//
// Encrypted GNN inference pipeline.
//
// Protocol mode keeps the graph fully packed: pruning means multiplying by an
// encrypted keep mask (zeroed slots still ride along), and band-adaptive
// activation is a masked sum over per-band polynomial evaluations. The server
// learns nothing about which nodes survive.
//
// Variants:
//   FF   masks + mask-based pruning + band-adaptive activation
//   PO   masks + mask-based pruning + one uniform activation polynomial
//   AAO  masks + band-adaptive activation, no pruning; the lowest band is
//        extended downward (no lower threshold) so every node is activated
//   BFG  plain pipeline: no masks, no pruning, uniform activation
//
// Mask values may come from the soft comparison circuit (default) or, in
// experiment mode, from exact hard-threshold masks encrypted directly; the
// oracle masks are placed at the levels the soft circuit would produce so
// both sources follow one level ladder.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/engine/psets.hpp"
#include "hegnn/graph/encrypt.hpp"
#include "hegnn/graph/types.hpp"
#include "hegnn/he/ops.hpp"
#include "hegnn/he/profile.hpp"
#include "hegnn/importance.hpp"

namespace hegnn {

enum class Variant { kFF, kPO, kAAO, kBFG };
enum class EngineMode { kProtocol, kCompaction };
enum class MaskSource { kSoft, kOracle };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kFF: return "FF";
    case Variant::kPO: return "PO";
    case Variant::kAAO: return "AAO";
    case Variant::kBFG: return "BFG";
  }
  return "?";
}

inline Variant variant_by_name(const std::string& name) {
  if (name == "FF" || name == "ff") return Variant::kFF;
  if (name == "PO" || name == "po") return Variant::kPO;
  if (name == "AAO" || name == "aao") return Variant::kAAO;
  if (name == "BFG" || name == "bfg") return Variant::kBFG;
  throw ParameterError("unknown variant \"" + name + "\" (expected FF|PO|AAO|BFG)");
}

struct EngineConfig {
  Variant variant = Variant::kFF;
  EngineMode mode = EngineMode::kProtocol;
  Thresholds tau;            // ignored by BFG
  PolyActivationSet polys;   // band polynomials; PO/BFG take one uniform poly
  int uniform_degree = 0;    // 0 -> polys' top degree
  double delta = 0.0;        // comparison normalization bound; 0 -> node count
  int sharpen = 1;
  OnesMode ones_mode = OnesMode::kEncrypted;
  he::PolyStrategy strategy = he::PolyStrategy::kHorner;
  MaskSource mask_source = MaskSource::kSoft;
  std::optional<PlainMasks> oracle;  // required for MaskSource::kOracle

  bool uses_masks() const { return variant != Variant::kBFG; }
  bool prunes() const { return variant == Variant::kFF || variant == Variant::kPO; }
  bool adaptive() const { return variant == Variant::kFF || variant == Variant::kAAO; }

  int uniform_poly_degree() const {
    return uniform_degree > 0 ? uniform_degree : polys.polys.front().degree();
  }

  // Bands actually evaluated: the per-band set for FF/AAO, one uniform
  // polynomial for PO/BFG.
  std::vector<ActPoly> active_polys() const {
    if (adaptive()) return polys.polys;
    const int d = uniform_poly_degree();
    for (const auto& p : polys.polys) {
      if (p.degree() == d) return {p};
    }
    // Fall back to the stock activation of that degree.
    switch (d) {
      case 7: return {act::relu_fit_deg7()};
      case 5: return {act::relu_fit_deg5()};
      case 3: return {act::relu_fit_deg3()};
      case 2: return {act::square()};
      case 1: return {act::identity()};
      default:
        throw ParameterError("no activation polynomial of degree " + std::to_string(d));
    }
  }

  void validate(std::size_t n) const {
    polys.validate();
    if (uses_masks()) {
      tau.validate();
      if (adaptive() && tau.m() != polys.m()) {
        throw ParameterError("threshold count " + std::to_string(tau.m()) +
                             " does not match activation band count " +
                             std::to_string(polys.m()));
      }
      if (mask_source == MaskSource::kOracle) {
        if (!oracle) throw ConfigError("oracle mask source selected but no masks supplied");
        if (oracle->m0.size() != n || oracle->m != tau.m()) {
          throw ConfigError("supplied oracle masks do not match the graph/threshold shape");
        }
      }
    }
    if (sharpen < 1) throw ParameterError("sharpen must be >= 1");
  }

  double effective_delta(std::size_t n) const {
    return delta > 0.0 ? delta : static_cast<double>(n);
  }
};

template <class Backend>
struct EncActivations {
  std::vector<typename Backend::Ciphertext> cols;
  std::size_t layer = 0;
};

struct StageLevel {
  std::string stage;
  int level;
};

struct StageProfile {
  std::string stage;
  he::OpProfile profile;
};

// Sum of mult_ct over every activation stage of a run; the headline number
// the compaction experiments compare across variants.
inline std::uint64_t activation_mult_ct(const std::vector<StageProfile>& stages) {
  std::uint64_t total = 0;
  for (const auto& s : stages) {
    if (s.stage.size() >= 9 &&
        s.stage.compare(s.stage.size() - 9, 9, "/activate") == 0) {
      total += s.profile.mult_ct;
    }
  }
  return total;
}

// Predicted level ladder for one run; `total` is the multiplicative depth
// consumed (chain levels minus the lowest level any stage touches).
struct DepthPlan {
  std::vector<StageLevel> stages;
  int total = 0;

  const StageLevel* first_exhausted() const {
    for (const auto& s : stages) {
      if (s.level < 0) return &s;
    }
    return nullptr;
  }
};

template <class Backend>
struct InferenceResult {
  EncActivations<Backend> logits;
  he::OpProfile profile;
  std::vector<StageLevel> trace;  // measured level after each stage
  std::vector<StageProfile> stage_profiles;
};

// --- depth planning ----------------------------------------------------------

// Symbolic replay of the level ladder; must stay in lockstep with the
// corresponding run_* implementations.
inline DepthPlan estimate_depth(const EngineConfig& cfg, std::size_t layer_count,
                                int chain_levels) {
  const std::size_t m = cfg.uses_masks() ? cfg.tau.m() : 0;
  DepthPlan plan;
  auto note = [&plan](const std::string& stage, int level) {
    plan.stages.push_back({stage, level});
  };

  const int fresh = chain_levels;
  int mask_level = fresh;
  if (cfg.uses_masks()) {
    const bool aao_trivial = cfg.variant == Variant::kAAO && m == 1;
    if (!aao_trivial) {
      const int score_level = fresh - 1;
      note("scores", score_level);
      const int cmp_level = score_level - he::aprx_cmp_depth(cfg.sharpen);
      bool combines = false;
      if (cfg.variant == Variant::kFF) combines = m >= 2;
      if (cfg.variant == Variant::kAAO) combines = m >= 3;
      mask_level = combines ? cmp_level - 1 : cmp_level;
      note("masks", mask_level);
    } else {
      note("masks", mask_level);
    }
  }
  const int keep_level = cfg.prunes() ? mask_level + (cfg.variant == Variant::kFF && m >= 2 ? 1 : 0)
                                      : fresh;
  // keep = c_m lives at the comparison level, above combined bands.

  int h_level = fresh;
  int a_level = fresh;
  if (cfg.prunes() && cfg.mode == EngineMode::kProtocol) {
    // Compaction prunes physically and pays no levels here.
    h_level = keep_level - 1;
    a_level = keep_level - 2;
    note("prune", a_level);
  }

  std::vector<int> degrees;
  for (const auto& p : cfg.active_polys()) degrees.push_back(p.degree());
  const int d_max = degrees.front();

  for (std::size_t l = 0; l < layer_count; ++l) {
    const std::string tag = "layer" + std::to_string(l + 1);
    const int agg_level = std::min(a_level, h_level) - 1;
    note(tag + "/aggregate", agg_level);
    const int z_level = std::min(agg_level - 1, h_level - 1);
    note(tag + "/combine", z_level);
    if (l + 1 < layer_count) {
      int next;
      if (cfg.uses_masks()) {
        const int deep = cfg.mode == EngineMode::kCompaction
                             ? z_level - d_max
                             : std::min(z_level - d_max, mask_level) - 1;
        next = deep;
      } else {
        next = z_level - d_max;
      }
      note(tag + "/activate", next);
      h_level = next;
    } else {
      h_level = z_level;
    }
  }
  note("logits", h_level);

  int lowest = chain_levels;
  for (const auto& s : plan.stages) lowest = std::min(lowest, s.level);
  plan.total = chain_levels - lowest;
  return plan;
}

// Throws if the plan dips below level 0, naming the first failing stage.
inline void check_depth_budget(const EngineConfig& cfg, std::size_t layer_count,
                               int chain_levels) {
  const DepthPlan plan = estimate_depth(cfg, layer_count, chain_levels);
  if (const StageLevel* bad = plan.first_exhausted()) {
    throw DepthExhaustedError("variant " + std::string(variant_name(cfg.variant)) +
                              " needs depth " + std::to_string(plan.total) + " but only " +
                              std::to_string(chain_levels) + " levels are available; stage \"" +
                              bad->stage + "\" would land at level " +
                              std::to_string(bad->level));
  }
}

// --- protocol-mode stages ----------------------------------------------------

namespace detail {

// Keep mask plus band masks for the requested variant. The keep mask is the
// lowest-threshold comparison itself (1 - M0); band masks follow the
// partition construction, except that AAO leaves its bottom band open below.
template <class Backend>
struct VariantMasks {
  std::optional<typename Backend::Ciphertext> keep;
  std::vector<typename Backend::Ciphertext> bands;
};

template <class Backend>
VariantMasks<Backend> build_masks(Backend& backend, const EncGraph<Backend>& g,
                                  const EngineConfig& cfg,
                                  const typename Backend::KeySet& keys) {
  VariantMasks<Backend> out;
  const std::size_t n = g.n;
  const std::size_t m = cfg.tau.m();
  const double delta = cfg.effective_delta(n);

  if (cfg.mask_source == MaskSource::kOracle) {
    // Encrypt the supplied hard masks, then drop them onto the soft ladder's
    // levels so downstream stages are identical for both sources.
    const DepthPlan plan = estimate_depth(cfg, 1, backend.params().levels());
    int mask_level = backend.params().levels();
    for (const auto& s : plan.stages) {
      if (s.stage == "masks") mask_level = s.level;
    }
    const PlainMasks& pm = *cfg.oracle;
    if (cfg.prunes()) {
      std::vector<double> keep_vals(n, 0.0);
      for (std::size_t v = 0; v < n; ++v) keep_vals[v] = 1.0 - pm.m0[v];
      const bool keep_above = cfg.variant == Variant::kFF && m >= 2;
      auto keep_ct = backend.encrypt(keep_vals, keys);
      out.keep = he::mod_switch_to(backend, keep_ct, mask_level + (keep_above ? 1 : 0));
    }
    if (cfg.adaptive()) {
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> band = pm.levels[i];
        if (cfg.variant == Variant::kAAO && i + 1 == m) {
          for (std::size_t v = 0; v < n; ++v) band[v] += pm.m0[v];  // open below
        }
        auto ct = backend.encrypt(band, keys);
        out.bands.push_back(he::mod_switch_to(backend, ct, mask_level));
      }
    } else if (cfg.variant == Variant::kPO) {
      std::vector<double> keep_vals(n, 0.0);
      for (std::size_t v = 0; v < n; ++v) keep_vals[v] = 1.0 - pm.m0[v];
      auto ct = backend.encrypt(keep_vals, keys);
      out.bands.push_back(he::mod_switch_to(backend, ct, mask_level));
    }
    return out;
  }

  if (cfg.variant == Variant::kAAO && m == 1) {
    // Single band over every node: no scoring, no comparison.
    out.bands.push_back(backend.encrypt(he::block_vector(1.0, n), keys));
    return out;
  }

  auto score = encrypted_degree(backend, g, keys, cfg.ones_mode);

  if (cfg.variant == Variant::kPO) {
    auto keep = he::aprx_cmp(backend, score.s_tilde, cfg.tau.tau[m - 1], delta,
                             cfg.sharpen, keys, n);
    out.keep = keep;
    out.bands.push_back(keep);
    return out;
  }

  const std::size_t cmp_count = cfg.variant == Variant::kAAO ? m - 1 : m;
  std::vector<typename Backend::Ciphertext> cmp;
  cmp.reserve(cmp_count);
  for (std::size_t i = 0; i < cmp_count; ++i) {
    cmp.push_back(he::aprx_cmp(backend, score.s_tilde, cfg.tau.tau[i], delta,
                               cfg.sharpen, keys, n));
  }
  if (cfg.variant == Variant::kFF) out.keep = cmp[m - 1];

  out.bands.push_back(cmp[0]);
  const std::size_t band_count = m;
  for (std::size_t i = 1; i < band_count; ++i) {
    auto upper_gap = he::sub_from_plain(backend, 1.0, cmp[i - 1], n);
    if (cfg.variant == Variant::kAAO && i + 1 == band_count) {
      out.bands.push_back(upper_gap);  // open below: no lower comparison
    } else {
      out.bands.push_back(backend.mult(cmp[i], upper_gap, keys));
    }
  }
  int lowest = out.bands[0].level;
  for (const auto& b : out.bands) lowest = std::min(lowest, b.level);
  for (auto& b : out.bands) b = he::mod_switch_to(backend, b, lowest);
  return out;
}

}  // namespace detail

// Zeroes pruned nodes in place: features take one keep factor, adjacency
// diagonals take both endpoint factors (source in slot order, target via the
// rotated keep mask).
template <class Backend>
EncGraph<Backend> apply_prune(Backend& backend, const EncGraph<Backend>& g,
                              const typename Backend::Ciphertext& keep,
                              const typename Backend::KeySet& keys) {
  EncGraph<Backend> out;
  out.n = g.n;
  out.d0 = g.d0;

  for (const auto& col : g.feature_cols) {
    auto x = he::mod_switch_to(backend, col, keep.level);
    out.feature_cols.push_back(backend.mult(x, keep, keys));
  }

  auto rotated = he::replicate_for_rotation(backend, keep, keys, g.n);
  for (std::size_t d = 0; d < g.n; ++d) {
    auto a = he::mod_switch_to(backend, g.adj_diagonals[d], keep.level);
    auto src = backend.mult(a, keep, keys);
    auto tgt = he::mod_switch_to(backend, rotated, src.level);
    out.adj_diagonals.push_back(backend.mult(src, tgt, keys));
    if (d + 1 < g.n) rotated = backend.rotate(rotated, 1, keys);
  }
  return out;
}

// One layer's pre-activation: neighbor aggregation by diagonal matvec per
// input column, plaintext weight mixing on both paths, bias last. When a keep
// mask is supplied the bias enters masked (keep * b), so pruned slots stay
// exactly zero.
template <class Backend>
EncActivations<Backend> layer_preactivation(
    Backend& backend, const std::vector<typename Backend::Ciphertext>& adj_diagonals,
    const EncActivations<Backend>& h, const LayerWeights& w, std::size_t n,
    const typename Backend::KeySet& keys,
    const typename Backend::Ciphertext* keep = nullptr) {
  const std::size_t d_in = w.w1.size();
  const std::size_t d_out = w.w1[0].size();
  if (h.cols.size() != d_in) {
    throw ModelError("layer expects " + std::to_string(d_in) + " input columns, got " +
                     std::to_string(h.cols.size()));
  }

  // Aggregate each input column across the graph.
  std::vector<typename Backend::Ciphertext> agg;
  agg.reserve(d_in);
  for (std::size_t j = 0; j < d_in; ++j) {
    auto rotated = he::replicate_for_rotation(backend, h.cols[j], keys, n);
    typename Backend::Ciphertext acc;
    for (std::size_t d = 0; d < n; ++d) {
      const int lvl = std::min(adj_diagonals[d].level, rotated.level);
      auto term = backend.mult(he::mod_switch_to(backend, adj_diagonals[d], lvl),
                               he::mod_switch_to(backend, rotated, lvl), keys);
      acc = d == 0 ? term : backend.add(acc, term);
      if (d + 1 < n) rotated = backend.rotate(rotated, 1, keys);
    }
    agg.push_back(std::move(acc));
  }

  EncActivations<Backend> z;
  z.layer = h.layer + 1;
  z.cols.reserve(d_out);
  for (std::size_t k = 0; k < d_out; ++k) {
    typename Backend::Ciphertext nb;
    for (std::size_t j = 0; j < d_in; ++j) {
      auto term = backend.mult_plain(
          agg[j], backend.encode(he::block_vector(w.w1[j][k], n), agg[j].level));
      nb = j == 0 ? term : backend.add(nb, term);
    }
    typename Backend::Ciphertext self;
    for (std::size_t j = 0; j < d_in; ++j) {
      auto term = backend.mult_plain(
          h.cols[j], backend.encode(he::block_vector(w.w2[j][k], n), h.cols[j].level));
      self = j == 0 ? term : backend.add(self, term);
    }
    const int lvl = std::min(nb.level, self.level);
    auto zk = backend.add(he::mod_switch_to(backend, nb, lvl),
                          he::mod_switch_to(backend, self, lvl));
    if (keep != nullptr) {
      auto bias = backend.mult_plain(
          *keep, backend.encode(he::block_vector(w.b[k], n), keep->level));
      zk = backend.add(zk, he::mod_switch_to(backend, bias, zk.level));
    } else {
      zk = backend.add_plain(zk, backend.encode(he::block_vector(w.b[k], n), zk.level));
    }
    z.cols.push_back(std::move(zk));
  }
  return z;
}

// Band-adaptive activation: every band polynomial is evaluated on the whole
// column, branches are aligned to the deepest one, and the masked sum selects
// per-node results.
template <class Backend>
EncActivations<Backend> adaptive_activation(
    Backend& backend, const EncActivations<Backend>& z,
    const std::vector<typename Backend::Ciphertext>& bands,
    const std::vector<ActPoly>& polys, std::size_t n,
    const typename Backend::KeySet& keys,
    he::PolyStrategy strategy = he::PolyStrategy::kHorner) {
  if (bands.size() != polys.size()) {
    throw ParameterError("band count " + std::to_string(bands.size()) +
                         " does not match polynomial count " + std::to_string(polys.size()));
  }
  EncActivations<Backend> h;
  h.layer = z.layer;
  h.cols.reserve(z.cols.size());
  for (const auto& zk : z.cols) {
    std::vector<typename Backend::Ciphertext> branches;
    branches.reserve(polys.size());
    for (const auto& p : polys) {
      branches.push_back(he::poly_eval(backend, p.coeffs, zk, keys, n, strategy));
    }
    int deep = branches[0].level;
    for (const auto& b : branches) deep = std::min(deep, b.level);
    for (const auto& b : bands) deep = std::min(deep, b.level);

    typename Backend::Ciphertext acc;
    for (std::size_t i = 0; i < branches.size(); ++i) {
      auto masked = backend.mult(he::mod_switch_to(backend, bands[i], deep),
                                 he::mod_switch_to(backend, branches[i], deep), keys);
      acc = i == 0 ? masked : backend.add(acc, masked);
    }
    h.cols.push_back(std::move(acc));
  }
  return h;
}

// Uniform activation with no mask: the baseline path.
template <class Backend>
EncActivations<Backend> uniform_activation(Backend& backend, const EncActivations<Backend>& z,
                                           const ActPoly& poly, std::size_t n,
                                           const typename Backend::KeySet& keys,
                                           he::PolyStrategy strategy) {
  EncActivations<Backend> h;
  h.layer = z.layer;
  h.cols.reserve(z.cols.size());
  for (const auto& zk : z.cols) {
    h.cols.push_back(he::poly_eval(backend, poly.coeffs, zk, keys, n, strategy));
  }
  return h;
}

// Full protocol-mode pipeline. Returns final-layer logits (no activation
// after the last layer), the op-count delta for the run, and the measured
// level after each stage.
template <class Backend>
InferenceResult<Backend> run_inference(Backend& backend, const EncGraph<Backend>& g,
                                       const ModelWeights& w, const EngineConfig& cfg,
                                       const typename Backend::KeySet& keys) {
  w.validate();
  cfg.validate(g.n);
  if (w.input_dim() != g.d0) {
    throw ModelError("model expects input dim " + std::to_string(w.input_dim()) +
                     " but the graph has " + std::to_string(g.d0) + " feature columns");
  }
  check_depth_budget(cfg, w.layer_count(), backend.params().levels());

  const he::OpProfile before = backend.profile();
  InferenceResult<Backend> result;
  he::OpProfile stage_start = before;
  auto note = [&](const std::string& stage, int level) {
    const he::OpProfile now = backend.profile();
    result.trace.push_back({stage, level});
    result.stage_profiles.push_back({stage, now - stage_start});
    stage_start = now;
  };

  detail::VariantMasks<Backend> masks;
  if (cfg.uses_masks()) {
    masks = detail::build_masks(backend, g, cfg, keys);
    note("masks", masks.bands.front().level);
  }

  const EncGraph<Backend>* active = &g;
  EncGraph<Backend> pruned;
  if (cfg.prunes()) {
    pruned = apply_prune(backend, g, *masks.keep, keys);
    active = &pruned;
    note("prune", pruned.adj_diagonals.front().level);
  }

  const std::vector<ActPoly> polys = cfg.active_polys();

  EncActivations<Backend> h;
  h.cols = active->feature_cols;
  for (std::size_t l = 0; l < w.layer_count(); ++l) {
    const std::string tag = "layer" + std::to_string(l + 1);
    const typename Backend::Ciphertext* keep =
        cfg.prunes() ? &*masks.keep : nullptr;
    auto z = layer_preactivation(backend, active->adj_diagonals, h, w.layers[l], g.n,
                                 keys, keep);
    note(tag + "/combine", z.cols.front().level);
    if (l + 1 < w.layer_count()) {
      if (cfg.uses_masks()) {
        h = adaptive_activation(backend, z, masks.bands, polys, g.n, keys, cfg.strategy);
      } else {
        h = uniform_activation(backend, z, polys.front(), g.n, keys, cfg.strategy);
      }
      note(tag + "/activate", h.cols.front().level);
    } else {
      h = std::move(z);
    }
  }
  note("logits", h.cols.front().level);

  result.logits = std::move(h);
  result.profile = backend.profile() - before;
  return result;
}

// Decrypts column-packed logits into an n x d matrix.
template <class Backend>
Matrix decrypt_logits(const Backend& backend, const EncActivations<Backend>& logits,
                      std::size_t n, const typename Backend::KeySet& keys) {
  Matrix out(n, std::vector<double>(logits.cols.size(), 0.0));
  for (std::size_t k = 0; k < logits.cols.size(); ++k) {
    const auto slots = backend.decrypt(logits.cols[k], keys);
    for (std::size_t v = 0; v < n; ++v) out[v][k] = slots[v];
  }
  return out;
}

}  // namespace hegnn
