// Plaintext reference forward pass, the design mirror of the packed pipeline,
// and the toy trainer (analytic gradients checked against central
// differences).
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
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

// Two 5-cliques joined by one bridge edge; features separate the cliques up
// to deterministic per-node jitter.
PlainGraph two_clique_graph() {
  PlainGraph g;
  g.n = 10;
  g.adjacency.assign(10, std::vector<double>(10, 0.0));
  auto edge = [&](std::size_t u, std::size_t v) {
    g.adjacency[u][v] = g.adjacency[v][u] = 1.0;
  };
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t v = u + 1; v < 5; ++v) {
      edge(u, v);
      edge(u + 5, v + 5);
    }
  }
  edge(4, 5);
  g.features.assign(10, {0.0, 0.0});
  for (std::size_t v = 0; v < 10; ++v) {
    const double jitter = 0.1 * static_cast<double>(v % 3);
    g.features[v][v < 5 ? 0 : 1] = 1.0 + jitter;
    g.features[v][v < 5 ? 1 : 0] = jitter;
  }
  g.labels.assign(10, 0);
  for (std::size_t v = 5; v < 10; ++v) g.labels[v] = 1;
  for (std::size_t v = 0; v < 10; ++v) g.splits.train.push_back(v);
  return g;
}

// 5-node labelled path with two features: small enough that a full central
// difference sweep stays cheap.
PlainGraph grad_check_graph() {
  PlainGraph g;
  g.n = 5;
  g.adjacency.assign(5, std::vector<double>(5, 0.0));
  auto edge = [&](std::size_t u, std::size_t v, double w) {
    g.adjacency[u][v] = g.adjacency[v][u] = w;
  };
  edge(0, 1, 1.0);
  edge(1, 2, 0.5);
  edge(2, 3, 1.0);
  edge(3, 4, 0.25);
  edge(0, 4, 0.75);
  g.features = {{0.4, -0.3}, {0.1, 0.8}, {-0.5, 0.2}, {0.9, -0.1}, {-0.2, -0.6}};
  g.labels = {0, 1, 0, 1, 0};
  return g;
}

// Fixed small weights so the gradient check is deterministic.
ModelWeights grad_check_weights() {
  ModelWeights w;
  LayerWeights l1, l2;
  l1.w1 = {{0.20, -0.10, 0.05}, {0.15, 0.25, -0.20}};
  l1.w2 = {{-0.05, 0.30, 0.10}, {0.40, -0.15, 0.20}};
  l1.b = {0.01, -0.02, 0.03};
  l2.w1 = {{0.12, -0.22}, {-0.08, 0.18}, {0.25, 0.05}};
  l2.w2 = {{0.30, -0.10}, {0.10, 0.20}, {-0.15, 0.35}};
  l2.b = {0.02, -0.01};
  w.layers = {std::move(l1), std::move(l2)};
  return w;
}

}  // namespace

TEST_CASE("polynomial value and derivative helpers") {
  const std::vector<double> c = {1.0, 2.0, 3.0};  // 1 + 2x + 3x^2
  CHECK(poly_value(c, 0.0) == 1.0);
  CHECK(poly_value(c, 2.0) == 17.0);
  CHECK(poly_value(c, -1.0) == 2.0);
  CHECK(poly_derivative(c, 2.0) == 14.0);  // 2 + 6x
  CHECK(poly_derivative(c, 0.0) == 2.0);
  const std::vector<double> lin = {0.5, 4.0};
  CHECK(poly_derivative(lin, 123.0) == 4.0);
}

TEST_CASE("reference forward pass on a hand-worked graph") {
  PlainGraph g;
  g.n = 2;
  g.adjacency = {{0.0, 1.0}, {1.0, 0.0}};
  g.features = {{1.0}, {2.0}};

  SECTION("single layer: aggregation, self path, bias") {
    ModelWeights w;
    LayerWeights l;
    l.w1 = {{0.5}};
    l.w2 = {{2.0}};
    l.b = {0.25};
    w.layers = {l};
    const Matrix h = forward_plain(g, w, act::square());
    // z_v = (A x)_v * 0.5 + x_v * 2 + 0.25; no activation after the last layer.
    CHECK(h[0][0] == 2.0 * 0.5 + 1.0 * 2.0 + 0.25);
    CHECK(h[1][0] == 1.0 * 0.5 + 2.0 * 2.0 + 0.25);
  }

  SECTION("two layers apply the activation between them") {
    ModelWeights w;
    LayerWeights l1, l2;
    l1.w1 = {{1.0}};
    l1.w2 = {{0.0}};
    l1.b = {0.0};
    l2.w1 = {{0.0}};
    l2.w2 = {{1.0}};
    l2.b = {1.0};
    w.layers = {l1, l2};
    // Layer 1: z = A x -> (2, 1); square -> (4, 1); layer 2: h + 1.
    const Matrix h = forward_plain(g, w, act::square());
    CHECK(h[0][0] == 5.0);
    CHECK(h[1][0] == 2.0);

    // A custom scalar activation takes the same path.
    const Matrix cube = forward_plain(g, w, [](double x) { return x * x * x; });
    CHECK(cube[0][0] == 9.0);
    CHECK(cube[1][0] == 2.0);
  }

  SECTION("dimension mismatch is rejected") {
    ModelWeights w;
    LayerWeights l;
    l.w1 = {{0.5}, {0.5}};  // expects two input features
    l.w2 = {{2.0}, {2.0}};
    l.b = {0.25};
    w.layers = {l};
    CHECK_THROWS_MATCHES(forward_plain(g, w, act::square()), ModelError,
                         MessageMatches(ContainsSubstring("expects input dim 2")));
  }
}

TEST_CASE("the design mirror reproduces the packed pipeline bit for bit") {
  const PlainGraph g = load_graph("data/graphs/demo16.json");
  const ModelWeights w = load_weights("data/weights/demo16.json");
  const Thresholds tau{{1.13, 0.89, 0.68}};

  for (Variant v : {Variant::kFF, Variant::kPO, Variant::kAAO, Variant::kBFG}) {
    const bool masked = v != Variant::kBFG;
    for (MaskSource src : {MaskSource::kSoft, MaskSource::kOracle}) {
      if (!masked && src == MaskSource::kOracle) continue;
      for (he::PolyStrategy strat :
           {he::PolyStrategy::kHorner, he::PolyStrategy::kPatersonStockmeyer}) {
        DYNAMIC_SECTION(variant_name(v) << "/"
                                        << (src == MaskSource::kSoft ? "soft" : "oracle") << "/"
                                        << (strat == he::PolyStrategy::kHorner ? "horner"
                                                                               : "ps")) {
          EngineConfig cfg;
          cfg.variant = v;
          cfg.tau = tau;
          cfg.polys = pset2();
          cfg.delta = 0.5;
          cfg.sharpen = 1;
          cfg.strategy = strat;
          cfg.mask_source = src;
          if (src == MaskSource::kOracle) cfg.oracle = oracle_masks(g, tau);

          he::SimBackend b(sim_params(), 1);
          auto keys = b.keygen(he::rotation_steps_for_block(g.n, b.params().slot_count()));
          auto enc = encrypt_graph(b, g, keys);
          const auto res = run_inference(b, enc, w, cfg, keys);
          const Matrix got = decrypt_logits(b, res.logits, g.n, keys);
          const PlainDesignResult ref = forward_design_plain(g, w, cfg);

          for (std::size_t node = 0; node < g.n; ++node) {
            for (std::size_t k = 0; k < w.output_dim(); ++k) {
              CHECK(got[node][k] == ref.logits[node][k]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("the design mirror without masks agrees with the textbook forward") {
  const PlainGraph g = load_graph("data/graphs/demo16.json");
  const ModelWeights w = load_weights("data/weights/demo16.json");

  EngineConfig cfg;
  cfg.variant = Variant::kBFG;
  cfg.polys = pset2();
  const PlainDesignResult design = forward_design_plain(g, w, cfg);
  const Matrix text = forward_plain(g, w, pset2().polys.front());

  // Same function, different float summation order.
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < w.output_dim(); ++k) {
      CHECK(design.logits[v][k] == Catch::Approx(text[v][k]).margin(1e-9));
    }
  }
}

TEST_CASE("analytic gradients match central differences") {
  const PlainGraph g = grad_check_graph();
  ModelWeights w = grad_check_weights();
  const std::vector<std::size_t> ids = {0, 1, 2, 3, 4};
  const double wd = 0.1;
  const double h = 1e-5;

  auto check_against_numeric = [&](const ActPoly& act, const Matrix* scale) {
    ModelWeights grads;
    toy_loss_and_gradients(g, w, act, ids, wd, &grads, scale);

    for (std::size_t l = 0; l < 2; ++l) {
      std::vector<double*> params;
      plain::flatten(w.layers[l], params);
      const std::vector<double> analytic = plain::flatten_values(grads.layers[l]);
      REQUIRE(params.size() == analytic.size());

      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double up = toy_loss_and_gradients(g, w, act, ids, wd, nullptr, scale);
        *params[i] = saved - h;
        const double dn = toy_loss_and_gradients(g, w, act, ids, wd, nullptr, scale);
        *params[i] = saved;
        const double numeric = (up - dn) / (2.0 * h);
        const double rel = std::abs(analytic[i] - numeric) /
                           std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
        INFO("layer " << l + 1 << " parameter " << i << ": analytic " << analytic[i]
                      << " numeric " << numeric);
        CHECK(rel <= 1e-4);
      }
    }
  };

  SECTION("square activation") { check_against_numeric(act::square(), nullptr); }
  SECTION("degree-5 activation") { check_against_numeric(act::relu_fit_deg5(), nullptr); }
  SECTION("with a fixed dropout scale") {
    Matrix scale(g.n, std::vector<double>(3, 2.0));  // keep prob 0.5
    scale[0][1] = 0.0;
    scale[2][0] = 0.0;
    scale[3][2] = 0.0;
    scale[4][1] = 0.0;
    check_against_numeric(act::square(), &scale);
  }
}

TEST_CASE("loss guards its inputs") {
  const PlainGraph g = grad_check_graph();
  const ModelWeights w = grad_check_weights();

  const std::vector<std::size_t> empty_ids;
  CHECK_THROWS_MATCHES(toy_loss(g, w, act::square(), empty_ids, 0.0), DataError,
                       MessageMatches(ContainsSubstring("at least one labelled node")));

  const std::vector<std::size_t> out_of_range = {0, 9};
  CHECK_THROWS_MATCHES(toy_loss(g, w, act::square(), out_of_range, 0.0), DataError,
                       MessageMatches(ContainsSubstring("node 9 is not labelled")));

  PlainGraph unlabeled = g;
  unlabeled.labels[2] = -1;
  const std::vector<std::size_t> ids = {0, 1, 2};
  CHECK_THROWS_MATCHES(toy_loss(unlabeled, w, act::square(), ids, 0.0), DataError,
                       MessageMatches(ContainsSubstring("node 2 is not labelled")));

  ModelWeights one_layer;
  one_layer.layers = {w.layers[0]};
  CHECK_THROWS_MATCHES(toy_loss(g, one_layer, act::square(), ids, 0.0), ModelError,
                       MessageMatches(ContainsSubstring("exactly two layers")));
}

TEST_CASE("the trainer separates two cliques") {
  const PlainGraph g = two_clique_graph();
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.02;
  cfg.dropout = 0.0;
  cfg.weight_decay = 1e-3;
  cfg.hidden_dim = 4;
  cfg.seed = 3;
  cfg.activation = act::square();

  const TrainResult r = train_toy(g, cfg);
  REQUIRE(r.weights.layer_count() == 2);
  CHECK(r.epochs_run <= 200);

  const Matrix logits = forward_plain(g, r.weights, cfg.activation);
  const double train_acc = accuracy(logits, g.labels, g.splits.train);
  CHECK(train_acc >= 0.95);
  CHECK(r.train_loss.front() > r.train_loss.back());

  SECTION("training is deterministic in the seed") {
    const TrainResult again = train_toy(g, cfg);
    REQUIRE(again.train_loss.size() == r.train_loss.size());
    CHECK(again.train_loss == r.train_loss);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(plain::flatten_values(again.weights.layers[l]) ==
            plain::flatten_values(r.weights.layers[l]));
    }

    TrainConfig other = cfg;
    other.seed = 4;
    const TrainResult different = train_toy(g, other);
    CHECK(plain::flatten_values(different.weights.layers[0]) !=
          plain::flatten_values(r.weights.layers[0]));
  }
}

TEST_CASE("early stopping restores the best validation weights") {
  PlainGraph g = two_clique_graph();
  g.splits.train = {0, 1, 2, 5, 6, 7};
  g.splits.val = {3, 4, 8, 9};

  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.02;
  cfg.dropout = 0.0;
  cfg.weight_decay = 1e-3;
  cfg.hidden_dim = 4;
  cfg.seed = 3;
  cfg.patience = 5;
  cfg.activation = act::square();

  const TrainResult r = train_toy(g, cfg);
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_epoch <= r.epochs_run);

  // The returned weights are the ones that produced the best validation
  // accuracy, so scoring them again reproduces it.
  const Matrix logits = forward_plain(g, r.weights, cfg.activation);
  CHECK(accuracy(logits, g.labels, g.splits.val) == r.best_val_accuracy);
}

TEST_CASE("trainer configuration and data guards") {
  const PlainGraph good = two_clique_graph();

  TrainConfig cfg;
  cfg.dropout = 0.0;

  SECTION("parameter ranges") {
    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_MATCHES(train_toy(good, bad), ParameterError,
                         MessageMatches(ContainsSubstring("epochs must be >= 1")));
    bad = cfg;
    bad.hidden_dim = 0;
    CHECK_THROWS_MATCHES(train_toy(good, bad), ParameterError,
                         MessageMatches(ContainsSubstring("hidden_dim must be >= 1")));
    bad = cfg;
    bad.dropout = 1.0;
    CHECK_THROWS_MATCHES(train_toy(good, bad), ParameterError,
                         MessageMatches(ContainsSubstring("dropout must lie in [0, 1)")));
  }

  SECTION("data requirements") {
    PlainGraph g = good;
    g.labels.clear();
    CHECK_THROWS_MATCHES(train_toy(g, cfg), DataError,
                         MessageMatches(ContainsSubstring("training needs labels")));
    g = good;
    g.splits.train.clear();
    CHECK_THROWS_MATCHES(train_toy(g, cfg), DataError,
                         MessageMatches(ContainsSubstring("training needs a train split")));
    g = good;
    g.labels[3] = -1;
    CHECK_THROWS_MATCHES(train_toy(g, cfg), DataError,
                         MessageMatches(ContainsSubstring("unlabelled node")));
    g = good;
    for (auto& row : g.features) row.clear();
    CHECK_THROWS_MATCHES(train_toy(g, cfg), DataError,
                         MessageMatches(ContainsSubstring("training needs node features")));
  }
}

TEST_CASE("accuracy resolves argmax ties to the lowest class") {
  const Matrix logits = {{0.5, 0.5}, {0.1, 0.9}};
  const std::vector<int> labels_tie_first = {0, 1};
  const std::vector<int> labels_tie_second = {1, 1};
  const std::vector<std::size_t> ids = {0, 1};
  CHECK(accuracy(logits, labels_tie_first, ids) == 1.0);
  CHECK(accuracy(logits, labels_tie_second, ids) == 0.5);
  CHECK(accuracy(logits, labels_tie_first, {}) == 0.0);
}
