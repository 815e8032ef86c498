// Degree scoring under encryption, band masks (hard and soft), and the
// ratio-to-threshold helpers.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hegnn/hegnn.hpp"

using namespace hegnn;

namespace {

he::HEParams sim_params(int levels = 16, std::size_t ring = 64) {
  he::HEParams p;
  p.ring_degree = ring;
  p.prime_bits.push_back(60);
  for (int i = 0; i < levels; ++i) p.prime_bits.push_back(40);
  p.prime_bits.push_back(60);
  p.scale_bits = 40;
  return p;
}

// Path graph 0-1-2-3-4 plus a hub attached to everything: degrees 2,3,3,3,2,5.
PlainGraph hub_graph() {
  PlainGraph g;
  g.n = 6;
  g.adjacency.assign(6, std::vector<double>(6, 0.0));
  auto edge = [&](std::size_t u, std::size_t v) {
    g.adjacency[u][v] = g.adjacency[v][u] = 1.0;
  };
  for (std::size_t v = 0; v + 1 < 5; ++v) edge(v, v + 1);
  for (std::size_t v = 0; v < 5; ++v) edge(5, v);
  g.features.assign(6, {1.0});
  return g;
}

}  // namespace

TEST_CASE("threshold lists must be strictly decreasing") {
  const Thresholds good{{3.0, 2.0, 1.0}};
  CHECK_NOTHROW(good.validate());
  const Thresholds empty{{}};
  CHECK_THROWS_AS(empty.validate(), ParameterError);
  const Thresholds flat{{2.0, 2.0}};
  CHECK_THROWS_AS(flat.validate(), ParameterError);
  const Thresholds rising{{1.0, 2.0}};
  CHECK_THROWS_AS(rising.validate(), ParameterError);
}

TEST_CASE("hard masks partition the nodes with ties resolving upward") {
  const PlainGraph g = hub_graph();  // degrees 2 3 3 3 2 5
  const Thresholds tau{{4.0, 3.0}};
  const PlainMasks pm = oracle_masks(g, tau);
  REQUIRE(pm.m == 2);

  // Exactly one indicator per node.
  for (std::size_t v = 0; v < g.n; ++v) {
    double sum = pm.m0[v];
    for (const auto& lvl : pm.levels) sum += lvl[v];
    CHECK(sum == 1.0);
  }
  // degree 5 -> band 0, degree 3 (== tau_1) -> band 1, degree 2 -> pruned.
  CHECK(pm.levels[0] == std::vector<double>{0, 0, 0, 0, 0, 1});
  CHECK(pm.levels[1] == std::vector<double>{0, 1, 1, 1, 0, 0});
  CHECK(pm.m0 == std::vector<double>{1, 0, 0, 0, 1, 0});

  SECTION("a node exactly at the top threshold joins the top band") {
    const PlainMasks at = oracle_masks(g, Thresholds{{5.0, 3.0}});
    CHECK(at.levels[0][5] == 1.0);
    CHECK(at.levels[1][5] == 0.0);
  }
}

TEST_CASE("encrypted degree scoring matches plaintext degrees") {
  const PlainGraph g = hub_graph();
  const auto want = g.degrees();

  he::SimBackend b(sim_params(), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, g, keys);

  SECTION("ciphertext ones vector") {
    auto s = encrypted_degree(b, enc, keys, OnesMode::kEncrypted);
    const auto got = b.decrypt(s.s_tilde, keys);
    for (std::size_t v = 0; v < g.n; ++v) CHECK(got[v] == want[v]);
    CHECK(b.profile().mult_ct == static_cast<std::uint64_t>(g.n));
  }
  SECTION("plaintext ones vector trades ct-ct products for ct-pt") {
    auto s = encrypted_degree(b, enc, keys, OnesMode::kPlain);
    const auto got = b.decrypt(s.s_tilde, keys);
    for (std::size_t v = 0; v < g.n; ++v) CHECK(got[v] == want[v]);
    CHECK(b.profile().mult_ct == 0);
    CHECK(b.profile().mult_plain == static_cast<std::uint64_t>(g.n));
  }
  SECTION("empty graph is rejected") {
    EncGraph<he::SimBackend> empty;
    CHECK_THROWS_AS(encrypted_degree(b, empty, keys), ParameterError);
  }
}

TEST_CASE("encrypted degree scoring on the lattice backend") {
  const PlainGraph g = hub_graph();
  const auto want = g.degrees();

  he::CkksBackend b(he::shallow_params(), 5);
  auto keys = b.keygen(he::rotation_steps_for_block(g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, g, keys);
  auto s = encrypted_degree(b, enc, keys);
  const auto got = b.decrypt(s.s_tilde, keys);
  for (std::size_t v = 0; v < g.n; ++v) {
    CHECK(got[v] == Catch::Approx(want[v]).margin(1e-3));
    CHECK(std::llround(got[v]) == std::llround(want[v]));
  }
}

TEST_CASE("soft masks approximate the hard partition and stay level-aligned") {
  const PlainGraph g = hub_graph();  // degrees 2 3 3 3 2 5
  const Thresholds tau{{4.0, 2.5}};
  const PlainMasks want = oracle_masks(g, tau);

  he::SimBackend b(sim_params(24), 1);
  auto keys = b.keygen(he::rotation_steps_for_block(g.n, b.params().slot_count()));
  auto enc = encrypt_graph(b, g, keys);
  auto s = encrypted_degree(b, enc, keys);

  // Tightest delta that still bounds |degree - tau| for every node and
  // threshold (max is |5 - 2.5|).  The smallest rounding margin is then
  // |3 - 2.5| / 2.5 = 0.2 of delta with all inputs inside the convergent
  // range of the sharpening polynomial.
  const double delta = 2.5;
  auto masks = generate_masks(b, s, tau, delta, /*sharpen=*/3, keys);
  REQUIRE(masks.m == 2);

  const auto m0 = b.decrypt(masks.m0, keys);
  const auto m1 = b.decrypt(masks.levels[0], keys);
  const auto m2 = b.decrypt(masks.levels[1], keys);

  SECTION("rounded soft masks equal the hard masks") {
    for (std::size_t v = 0; v < g.n; ++v) {
      CHECK(std::round(m0[v]) == want.m0[v]);
      CHECK(std::round(m1[v]) == want.levels[0][v]);
      CHECK(std::round(m2[v]) == want.levels[1][v]);
    }
  }
  SECTION("the mask family sums close to one on every node") {
    for (std::size_t v = 0; v < g.n; ++v) {
      CHECK(m0[v] + m1[v] + m2[v] == Catch::Approx(1.0).margin(0.15));
    }
  }
  SECTION("all masks are aligned to one level") {
    CHECK(masks.m0.level == masks.levels[0].level);
    CHECK(masks.m0.level == masks.levels[1].level);
  }
}

TEST_CASE("ratio-derived prune threshold") {
  PlainGraph g;
  g.n = 6;
  g.adjacency.assign(6, std::vector<double>(6, 0.0));
  // Weighted self-free graph with degrees 1, 2, 2, 3, 5, 7.
  const std::vector<double> target = {1, 2, 2, 3, 5, 7};
  for (std::size_t v = 0; v < 6; ++v) g.adjacency[v][(v + 1) % 6] = target[v];

  auto pruned_count = [&](double tau) {
    std::size_t c = 0;
    for (double d : g.degrees()) c += d < tau;
    return c;
  };

  SECTION("ratio zero prunes nothing") {
    CHECK(pruned_count(threshold_for_ratio(g, 0.0)) == 0);
  }
  SECTION("distinct cut point prunes exactly floor(ratio * n)") {
    const double tau = threshold_for_ratio(g, 0.5);  // k = 3: cut after degree 2
    CHECK(tau == Catch::Approx(2.5));
    CHECK(pruned_count(tau) == 3);
  }
  SECTION("a tie at the cut point pulls the whole tied group below it") {
    const double tau = threshold_for_ratio(g, 2.0 / 6.0);  // k = 2, deg[1] = deg[2] = 2
    CHECK(pruned_count(tau) == 3);
  }
  SECTION("monotone in the ratio") {
    std::size_t prev = 0;
    for (double r : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      const std::size_t c = pruned_count(threshold_for_ratio(g, r));
      CHECK(c >= prev);
      prev = c;
    }
  }
  SECTION("invalid ratios and empty graphs are rejected") {
    CHECK_THROWS_AS(threshold_for_ratio(g, -0.1), ParameterError);
    CHECK_THROWS_AS(threshold_for_ratio(g, 1.0), ParameterError);
    CHECK_THROWS_AS(threshold_for_ratio(PlainGraph{}, 0.5), ParameterError);
  }
}

TEST_CASE("ratio-derived band thresholds") {
  const PlainGraph g = load_graph("data/graphs/karate34.json");

  SECTION("one band reduces to the plain prune threshold") {
    const Thresholds t = thresholds_for_ratio(g, 0.25, 1);
    CHECK(t.tau[0] == threshold_for_ratio(g, 0.25));
  }
  SECTION("three bands descend strictly and keep the same prune cut") {
    const Thresholds t = thresholds_for_ratio(g, 0.25, 3);
    REQUIRE(t.m() == 3);
    CHECK_NOTHROW(t.validate());
    CHECK(t.tau[2] == threshold_for_ratio(g, 0.25));

    // Band cuts split the retained nodes close to evenly.
    const PlainMasks pm = oracle_masks(g, t);
    std::size_t retained = 0;
    std::vector<std::size_t> band_sizes(3, 0);
    for (std::size_t v = 0; v < g.n; ++v) {
      if (pm.m0[v] == 0.0) ++retained;
      for (std::size_t i = 0; i < 3; ++i) band_sizes[i] += pm.levels[i][v] == 1.0;
    }
    CHECK(retained == 25);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(band_sizes[i] >= 6);
      CHECK(band_sizes[i] <= 11);
    }
  }
  SECTION("band count zero is rejected") {
    CHECK_THROWS_AS(thresholds_for_ratio(g, 0.25, 0), ParameterError);
  }
  SECTION("degenerate all-equal degrees still produce a valid list") {
    PlainGraph ring;
    ring.n = 8;
    ring.adjacency.assign(8, std::vector<double>(8, 0.0));
    for (std::size_t v = 0; v < 8; ++v) {
      ring.adjacency[v][(v + 1) % 8] = ring.adjacency[(v + 1) % 8][v] = 1.0;
    }
    const Thresholds t = thresholds_for_ratio(ring, 0.25, 3);
    CHECK_NOTHROW(t.validate());
  }
}
