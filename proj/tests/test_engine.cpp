// Activation polynomial sets, engine configuration, depth planning, and the
// packed/compacted inference pipelines on the exact-arithmetic backend.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hegnn/hegnn.hpp"

using namespace hegnn;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

he::HEParams sim_params(int levels = 24, std::size_t ring = 64) {
  he::HEParams p;
  p.ring_degree = ring;
  p.prime_bits.push_back(60);
  for (int i = 0; i < levels; ++i) p.prime_bits.push_back(40);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

struct Fixture {
  PlainGraph g;
  ModelWeights w;
  Thresholds tau{{1.13, 0.89, 0.68}};
  double delta = 0.5;
};

Fixture demo_fixture() {
  Fixture f;
  f.g = load_graph("data/graphs/demo16.json");
  f.w = load_weights("data/weights/demo16.json");
  return f;
}

EngineConfig base_config(const Fixture& f, Variant v, EngineMode mode,
                         const PolyActivationSet& set) {
  EngineConfig cfg;
  cfg.variant = v;
  cfg.mode = mode;
  cfg.tau = f.tau;
  cfg.polys = set;
  cfg.delta = f.delta;
  cfg.sharpen = 1;
  return cfg;
}

// Scratch file under the build tree so test runs never dirty the source dir.
struct TmpFile {
  std::string path;
  explicit TmpFile(const std::string& name) : path("build/" + name) {}
  ~TmpFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("activation presets expose strictly decreasing degrees") {
  const PolyActivationSet p1 = pset1(), p2 = pset2(), p3 = pset3();
  CHECK_NOTHROW(p1.validate());
  CHECK_NOTHROW(p2.validate());
  CHECK_NOTHROW(p3.validate());

  auto degrees = [](const PolyActivationSet& s) {
    std::vector<int> d;
    for (const auto& p : s.polys) d.push_back(p.degree());
    return d;
  };
  CHECK(degrees(p1) == std::vector<int>{7, 5, 3});
  CHECK(degrees(p2) == std::vector<int>{5, 3, 2});
  CHECK(degrees(p3) == std::vector<int>{3, 2, 1});
  CHECK(p1.m() == 3);
  CHECK(p2.top_degree() == 5);

  SECTION("preset lookup by name") {
    CHECK(preset_by_name("pset3").polys[2].coeffs == act::identity().coeffs);
    CHECK_THROWS_MATCHES(preset_by_name("pset9"), ParameterError,
                         MessageMatches(ContainsSubstring("(expected pset1|pset2|pset3)")));
  }

  SECTION("validation rejects malformed sets") {
    const PolyActivationSet empty;
    CHECK_THROWS_AS(empty.validate(), ParameterError);
    const PolyActivationSet no_coeffs{{ActPoly{}}};
    CHECK_THROWS_MATCHES(no_coeffs.validate(), ParameterError,
                         MessageMatches(ContainsSubstring("no coefficients")));
    const PolyActivationSet rising{{act::square(), act::relu_fit_deg3()}};
    CHECK_THROWS_MATCHES(rising.validate(), ParameterError,
                         MessageMatches(ContainsSubstring("strictly decreasing")));
    const PolyActivationSet flat{{act::square(), act::square()}};
    CHECK_THROWS_AS(flat.validate(), ParameterError);
  }
}

TEST_CASE("activation sets round-trip through their JSON form") {
  SECTION("save then load is coefficient-exact") {
    TmpFile tmp("pset_roundtrip.json");
    save_polyset(pset2(), tmp.path);
    const PolyActivationSet back = load_polyset(tmp.path);
    REQUIRE(back.m() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.polys[i].coeffs == pset2().polys[i].coeffs);
    }
  }

  SECTION("the bundled preset files match the built-in definitions") {
    const std::vector<std::pair<std::string, PolyActivationSet>> cases = {
        {"data/polys/pset1.json", pset1()},
        {"data/polys/pset2.json", pset2()},
        {"data/polys/pset3.json", pset3()},
    };
    for (const auto& [path, want] : cases) {
      INFO(path);
      const PolyActivationSet got = load_polyset(path);
      REQUIRE(got.m() == want.m());
      for (std::size_t i = 0; i < want.m(); ++i) {
        CHECK(got.polys[i].coeffs == want.polys[i].coeffs);
      }
    }
  }

  SECTION("loader errors carry the offending path") {
    CHECK_THROWS_MATCHES(load_polyset("build/no_such_polyset.json"), ParseError,
                         MessageMatches(ContainsSubstring("cannot open")));
    TmpFile bad_degree("pset_bad_degree.json");
    {
      std::FILE* f = std::fopen(bad_degree.path.c_str(), "w");
      REQUIRE(f != nullptr);
      std::fputs(R"([{"degree": 3, "coeffs": [0.0, 1.0]}])", f);
      std::fclose(f);
    }
    CHECK_THROWS_MATCHES(load_polyset(bad_degree.path), ParseError,
                         MessageMatches(ContainsSubstring("declared degree")));
    TmpFile not_array("pset_not_array.json");
    {
      std::FILE* f = std::fopen(not_array.path.c_str(), "w");
      REQUIRE(f != nullptr);
      std::fputs(R"({"coeffs": [1.0]})", f);
      std::fclose(f);
    }
    CHECK_THROWS_MATCHES(load_polyset(not_array.path), ParseError,
                         MessageMatches(ContainsSubstring("expected a top-level array")));
  }
}

TEST_CASE("engine configuration classifies the variants") {
  EngineConfig cfg;
  cfg.polys = pset2();
  cfg.tau = Thresholds{{1.0, 0.5, 0.25}};

  cfg.variant = Variant::kFF;
  CHECK(cfg.uses_masks());
  CHECK(cfg.prunes());
  CHECK(cfg.adaptive());
  cfg.variant = Variant::kPO;
  CHECK(cfg.uses_masks());
  CHECK(cfg.prunes());
  CHECK_FALSE(cfg.adaptive());
  cfg.variant = Variant::kAAO;
  CHECK(cfg.uses_masks());
  CHECK_FALSE(cfg.prunes());
  CHECK(cfg.adaptive());
  cfg.variant = Variant::kBFG;
  CHECK_FALSE(cfg.uses_masks());
  CHECK_FALSE(cfg.prunes());
  CHECK_FALSE(cfg.adaptive());

  SECTION("variant names round-trip") {
    for (Variant v : {Variant::kFF, Variant::kPO, Variant::kAAO, Variant::kBFG}) {
      CHECK(variant_by_name(variant_name(v)) == v);
    }
    CHECK(variant_by_name("aao") == Variant::kAAO);
    CHECK_THROWS_MATCHES(variant_by_name("FFX"), ParameterError,
                         MessageMatches(ContainsSubstring("(expected FF|PO|AAO|BFG)")));
  }

  SECTION("effective delta falls back to the node count") {
    cfg.delta = 0.0;
    CHECK(cfg.effective_delta(16) == 16.0);
    cfg.delta = 0.75;
    CHECK(cfg.effective_delta(16) == 0.75);
  }
}

TEST_CASE("active polynomial selection per variant") {
  EngineConfig cfg;
  cfg.polys = pset2();  // degrees 5, 3, 2
  cfg.tau = Thresholds{{1.0, 0.5, 0.25}};

  SECTION("adaptive variants evaluate every band") {
    cfg.variant = Variant::kFF;
    CHECK(cfg.active_polys().size() == 3);
    cfg.variant = Variant::kAAO;
    CHECK(cfg.active_polys().size() == 3);
  }

  SECTION("uniform variants default to the top-band polynomial") {
    cfg.variant = Variant::kPO;
    const auto polys = cfg.active_polys();
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].degree() == 5);
  }

  SECTION("an explicit uniform degree picks the matching band") {
    cfg.variant = Variant::kBFG;
    cfg.uniform_degree = 3;
    const auto polys = cfg.active_polys();
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].coeffs == act::relu_fit_deg3().coeffs);
  }

  SECTION("a uniform degree outside the set falls back to the stock activation") {
    cfg.variant = Variant::kBFG;
    cfg.polys = pset3();  // degrees 3, 2, 1 -- no degree 7
    cfg.uniform_degree = 7;
    const auto polys = cfg.active_polys();
    REQUIRE(polys.size() == 1);
    CHECK(polys[0].coeffs == act::relu_fit_deg7().coeffs);
  }

  SECTION("a degree nothing provides is rejected") {
    cfg.variant = Variant::kPO;
    cfg.uniform_degree = 4;
    CHECK_THROWS_MATCHES(cfg.active_polys(), ParameterError,
                         MessageMatches(ContainsSubstring("no activation polynomial of degree 4")));
  }
}

TEST_CASE("engine configuration validation") {
  const std::size_t n = 16;
  EngineConfig cfg;
  cfg.variant = Variant::kFF;
  cfg.polys = pset2();
  cfg.tau = Thresholds{{1.0, 0.5, 0.25}};
  CHECK_NOTHROW(cfg.validate(n));

  SECTION("adaptive variants need one threshold per band") {
    cfg.tau = Thresholds{{1.0, 0.5}};
    CHECK_THROWS_MATCHES(cfg.validate(n), ParameterError,
                         MessageMatches(ContainsSubstring("does not match activation band count")));
    cfg.variant = Variant::kPO;  // uniform: band count free
    CHECK_NOTHROW(cfg.validate(n));
  }

  SECTION("the baseline ignores thresholds entirely") {
    cfg.variant = Variant::kBFG;
    cfg.tau = Thresholds{};
    CHECK_NOTHROW(cfg.validate(n));
  }

  SECTION("oracle masks must be supplied and shaped right") {
    cfg.mask_source = MaskSource::kOracle;
    CHECK_THROWS_MATCHES(cfg.validate(n), ConfigError,
                         MessageMatches(ContainsSubstring("oracle mask source selected but no masks supplied")));
    PlainMasks wrong;
    wrong.m = 3;
    wrong.m0.assign(n - 1, 0.0);  // wrong node count
    wrong.levels.assign(3, std::vector<double>(n - 1, 0.0));
    cfg.oracle = wrong;
    CHECK_THROWS_MATCHES(cfg.validate(n), ConfigError,
                         MessageMatches(ContainsSubstring("do not match the graph/threshold shape")));
  }

  SECTION("sharpen must be positive") {
    cfg.sharpen = 0;
    CHECK_THROWS_MATCHES(cfg.validate(n), ParameterError,
                         MessageMatches(ContainsSubstring("sharpen must be >= 1")));
  }
}

TEST_CASE("predicted depth matches the measured ladder for every variant") {
  const Fixture f = demo_fixture();
  const std::vector<std::pair<std::string, PolyActivationSet>> sets = {
      {"pset1", pset1()}, {"pset2", pset2()}, {"pset3", pset3()}};

  for (Variant v : {Variant::kFF, Variant::kPO, Variant::kAAO, Variant::kBFG}) {
    for (const auto& [pname, set] : sets) {
      for (EngineMode mode : {EngineMode::kProtocol, EngineMode::kCompaction}) {
        DYNAMIC_SECTION(variant_name(v) << "/" << pname << "/"
                                        << (mode == EngineMode::kProtocol ? "protocol"
                                                                          : "compaction")) {
          const EngineConfig cfg = base_config(f, v, mode, set);
          he::SimBackend b(sim_params(), 1);
          auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
          const DepthPlan plan =
              estimate_depth(cfg, f.w.layer_count(), b.params().levels());
          REQUIRE(plan.first_exhausted() == nullptr);

          he::OpProfile prof;
          if (mode == EngineMode::kProtocol) {
            auto enc = encrypt_graph(b, f.g, keys);
            prof = run_inference(b, enc, f.w, cfg, keys).profile;
          } else {
            prof = run_compact_inference(b, f.g, f.w, cfg, keys).profile;
          }
          CHECK(static_cast<int>(prof.max_depth) == plan.total);
        }
      }
    }
  }
}

TEST_CASE("the protocol trace lands on the planned levels stage by stage") {
  const Fixture f = demo_fixture();
  const EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kProtocol, pset2());

  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, f.g, keys);
  const DepthPlan plan = estimate_depth(cfg, f.w.layer_count(), b.params().levels());
  const auto res = run_inference(b, enc, f.w, cfg, keys);

  // Every traced stage must appear in the plan at the same level. The plan
  // additionally contains internal waypoints (scores, per-layer aggregate)
  // that the runtime does not close out as stages of their own.
  REQUIRE_FALSE(res.trace.empty());
  for (const auto& traced : res.trace) {
    INFO("stage " << traced.stage);
    const auto it = std::find_if(plan.stages.begin(), plan.stages.end(),
                                 [&](const StageLevel& s) { return s.stage == traced.stage; });
    REQUIRE(it != plan.stages.end());
    CHECK(traced.level == it->level);
  }

  SECTION("stage names cover the full pipeline") {
    std::vector<std::string> names;
    for (const auto& t : res.trace) names.push_back(t.stage);
    CHECK(names == std::vector<std::string>{"masks", "prune", "layer1/combine",
                                            "layer1/activate", "layer2/combine", "logits"});
  }

  SECTION("per-stage profiles sum to the run profile") {
    he::OpProfile sum;
    for (const auto& sp : res.stage_profiles) {
      sum.add += sp.profile.add;
      sum.mult_ct += sp.profile.mult_ct;
      sum.mult_plain += sp.profile.mult_plain;
      sum.rotate += sp.profile.rotate;
      sum.rescale += sp.profile.rescale;
      sum.relinearize += sp.profile.relinearize;
    }
    CHECK(sum.mult_ct == res.profile.mult_ct);
    CHECK(sum.rotate == res.profile.rotate);
    CHECK(sum.rescale == res.profile.rescale);
  }
}

TEST_CASE("activation cost is the mult count of the activate stages") {
  const Fixture f = demo_fixture();
  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, f.g, keys);
  const EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kProtocol, pset2());
  const auto res = run_inference(b, enc, f.w, cfg, keys);

  std::uint64_t manual = 0;
  std::size_t activate_stages = 0;
  for (const auto& sp : res.stage_profiles) {
    if (sp.stage.ends_with("/activate")) {
      manual += sp.profile.mult_ct;
      ++activate_stages;
    }
  }
  CHECK(activate_stages == f.w.layer_count() - 1);
  CHECK(manual > 0);
  CHECK(activation_mult_ct(res.stage_profiles) == manual);
}

TEST_CASE("soft and oracle mask sources share one level ladder") {
  const Fixture f = demo_fixture();

  auto run_with = [&](MaskSource src) {
    EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kProtocol, pset2());
    cfg.mask_source = src;
    if (src == MaskSource::kOracle) cfg.oracle = oracle_masks(f.g, f.tau);
    he::SimBackend b(sim_params(), 1);
    auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
    auto enc = encrypt_graph(b, f.g, keys);
    return run_inference(b, enc, f.w, cfg, keys);
  };

  const auto soft = run_with(MaskSource::kSoft);
  const auto oracle = run_with(MaskSource::kOracle);

  REQUIRE(soft.trace.size() == oracle.trace.size());
  for (std::size_t i = 0; i < soft.trace.size(); ++i) {
    CHECK(soft.trace[i].stage == oracle.trace[i].stage);
    CHECK(soft.trace[i].level == oracle.trace[i].level);
  }
  CHECK(soft.profile.max_depth == oracle.profile.max_depth);
}

TEST_CASE("single-band adaptive mode needs no comparison circuit") {
  // AAO with one band covers every node; the mask is a constant and costs no
  // depth, so the whole run should match the plan exactly like the rest.
  const Fixture f = demo_fixture();
  EngineConfig cfg;
  cfg.variant = Variant::kAAO;
  cfg.tau = Thresholds{{0.5}};
  cfg.polys = PolyActivationSet{{act::relu_fit_deg3()}};
  cfg.delta = f.delta;

  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, f.g, keys);
  const DepthPlan plan = estimate_depth(cfg, f.w.layer_count(), b.params().levels());
  const auto res = run_inference(b, enc, f.w, cfg, keys);
  CHECK(static_cast<int>(res.profile.max_depth) == plan.total);
  REQUIRE(plan.stages.size() >= 1);
  CHECK(plan.stages.front().stage == "masks");
  CHECK(plan.stages.front().level == b.params().levels());
}

TEST_CASE("compaction prunes physically and matches the hard-mask reference") {
  const Fixture f = demo_fixture();
  EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kCompaction, pset2());

  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  const auto res = run_compact_inference(b, f.g, f.w, cfg, keys);

  const PlainMasks pm = oracle_masks(f.g, f.tau);
  std::vector<std::size_t> expect_nodes;
  for (std::size_t v = 0; v < f.g.n; ++v) {
    if (pm.m0[v] == 0.0) expect_nodes.push_back(v);
  }
  CHECK(res.nodes == expect_nodes);
  REQUIRE_FALSE(expect_nodes.empty());
  REQUIRE(expect_nodes.size() < f.g.n);

  // The value path equals the packed pipeline driven by hard masks; only the
  // floating-point summation order differs.
  EngineConfig ref_cfg = cfg;
  ref_cfg.mask_source = MaskSource::kOracle;
  ref_cfg.oracle = pm;
  const PlainDesignResult ref = forward_design_plain(f.g, f.w, ref_cfg);

  const Matrix got = decrypt_compact_logits(b, res, f.g.n, f.w.output_dim(), keys);
  for (std::size_t v = 0; v < f.g.n; ++v) {
    for (std::size_t k = 0; k < f.w.output_dim(); ++k) {
      CHECK(got[v][k] == Catch::Approx(ref.logits[v][k]).margin(1e-9));
    }
  }

  SECTION("pruned nodes decode as zero rows") {
    for (std::size_t v = 0; v < f.g.n; ++v) {
      if (pm.m0[v] == 1.0) {
        for (double x : got[v]) CHECK(x == 0.0);
      }
    }
  }

  SECTION("the mask stage still runs for cost parity") {
    REQUIRE_FALSE(res.trace.empty());
    CHECK(res.trace.front().stage == "masks");
  }
}

TEST_CASE("the baseline variant runs compaction without any mask stage") {
  const Fixture f = demo_fixture();
  EngineConfig cfg = base_config(f, Variant::kBFG, EngineMode::kCompaction, pset2());

  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  const auto res = run_compact_inference(b, f.g, f.w, cfg, keys);

  CHECK(res.nodes.size() == f.g.n);
  for (const auto& t : res.trace) CHECK(t.stage != "masks");
}

TEST_CASE("compaction refuses a protocol-mode configuration") {
  const Fixture f = demo_fixture();
  EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kProtocol, pset2());
  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  CHECK_THROWS_MATCHES(run_compact_inference(b, f.g, f.w, cfg, keys), ConfigError,
                       MessageMatches(ContainsSubstring("requires EngineMode::kCompaction")));
}

TEST_CASE("a chain too short for the plan is rejected before any work") {
  const Fixture f = demo_fixture();
  const EngineConfig cfg = base_config(f, Variant::kFF, EngineMode::kProtocol, pset1());

  const DepthPlan plan = estimate_depth(cfg, f.w.layer_count(), 8);
  REQUIRE(plan.first_exhausted() != nullptr);
  CHECK(plan.first_exhausted()->level < 0);

  CHECK_THROWS_MATCHES(check_depth_budget(cfg, f.w.layer_count(), 8), DepthExhaustedError,
                       MessageMatches(ContainsSubstring("needs depth")));

  he::SimBackend b(sim_params(8), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(f.g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, f.g, keys);
  const he::OpProfile before = b.profile();
  CHECK_THROWS_AS(run_inference(b, enc, f.w, cfg, keys), DepthExhaustedError);
  // The budget check fires before the pipeline touches the backend.
  CHECK(b.profile().mult_ct == before.mult_ct);
  CHECK(b.profile().rotate == before.rotate);
}
