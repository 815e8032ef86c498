// SPDX-License-Identifier: Apache-2.0
//
// Toy trainer for the two-layer reference network, used to produce fixture
// weights. Full-batch softmax cross-entropy on the train split, polynomial
// activation (square by default, so the trained function family matches what
// the encrypted pipeline can evaluate), inverted dropout on the hidden
// activations, Adam with additive L2 weight decay, and early stopping on
// validation accuracy with best-weights restore. Deterministic for a fixed
// seed on a fixed platform.
//
// The loss includes the L2 term, so the analytic gradients here check out
// against central differences including the decay path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hegnn/engine/psets.hpp"
#include "hegnn/errors.hpp"
#include "hegnn/graph/types.hpp"
#include "hegnn/plain/forward.hpp"

namespace hegnn {

struct TrainConfig {
  int epochs = 200;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  int patience = 20;
  std::size_t hidden_dim = 8;
  std::uint64_t seed = 1;
  ActPoly activation = act::square();
};

struct TrainResult {
  ModelWeights weights;
  std::vector<double> train_loss;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
};

// Fraction of `ids` whose argmax logit matches the label (ties resolve to the
// lowest class index).
inline double accuracy(const Matrix& logits, const std::vector<int>& labels,
                       const std::vector<std::size_t>& ids) {
  if (ids.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t v : ids) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits[v].size(); ++c) {
      if (logits[v][c] > logits[v][best]) best = c;
    }
    if (static_cast<int>(best) == labels[v]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

namespace plain {

inline Matrix zeros(std::size_t r, std::size_t c) {
  return Matrix(r, std::vector<double>(c, 0.0));
}

inline Matrix transpose(const Matrix& a) {
  if (a.empty()) return {};
  Matrix t(a[0].size(), std::vector<double>(a.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  }
  return t;
}

struct ForwardCache {
  Matrix u1, z1, h, hd, u2, z2;
};

// Two-layer forward with optional dropout scaling (entries 0 or 1/(1-p)).
inline ForwardCache toy_forward(const PlainGraph& g, const ModelWeights& w,
                                const ActPoly& act, const Matrix* dropout_scale) {
  const LayerWeights& l1 = w.layers[0];
  const LayerWeights& l2 = w.layers[1];
  ForwardCache c;
  c.u1 = matmul(g.adjacency, g.features);
  c.z1 = matmul(c.u1, l1.w1);
  const Matrix self1 = matmul(g.features, l1.w2);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < l1.b.size(); ++k) c.z1[v][k] += self1[v][k] + l1.b[k];
  }
  c.h = c.z1;
  for (auto& row : c.h) {
    for (auto& x : row) x = poly_value(act.coeffs, x);
  }
  c.hd = c.h;
  if (dropout_scale != nullptr) {
    for (std::size_t v = 0; v < g.n; ++v) {
      for (std::size_t k = 0; k < c.hd[v].size(); ++k) c.hd[v][k] *= (*dropout_scale)[v][k];
    }
  }
  c.u2 = matmul(g.adjacency, c.hd);
  c.z2 = matmul(c.u2, l2.w1);
  const Matrix self2 = matmul(c.hd, l2.w2);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < l2.b.size(); ++k) c.z2[v][k] += self2[v][k] + l2.b[k];
  }
  return c;
}

inline double frob_sq(const Matrix& m) {
  double s = 0.0;
  for (const auto& row : m) {
    for (double x : row) s += x * x;
  }
  return s;
}

}  // namespace plain

// Mean softmax cross-entropy over `ids` plus (wd/2) * ||W||^2 over the four
// weight matrices (biases are not decayed). Gradients land in `grads` (same
// shapes as `w`) when non-null.
inline double toy_loss_and_gradients(const PlainGraph& g, const ModelWeights& w,
                                     const ActPoly& act,
                                     const std::vector<std::size_t>& ids,
                                     double weight_decay, ModelWeights* grads,
                                     const Matrix* dropout_scale = nullptr) {
  if (w.layer_count() != 2) {
    throw ModelError("the toy trainer handles exactly two layers, got " +
                     std::to_string(w.layer_count()));
  }
  w.validate();
  g.validate();
  if (ids.empty()) throw DataError("loss needs at least one labelled node");
  for (std::size_t v : ids) {
    if (v >= g.n || g.labels.empty() || g.labels[v] < 0) {
      throw DataError("node " + std::to_string(v) + " is not labelled");
    }
  }

  const LayerWeights& l1 = w.layers[0];
  const LayerWeights& l2 = w.layers[1];
  const std::size_t classes = l2.b.size();
  const plain::ForwardCache c = plain::toy_forward(g, w, act, dropout_scale);

  const double inv = 1.0 / static_cast<double>(ids.size());
  double loss = 0.0;
  Matrix dz2 = plain::zeros(g.n, classes);
  for (std::size_t v : ids) {
    double mx = c.z2[v][0];
    for (double z : c.z2[v]) mx = std::max(mx, z);
    double lse = 0.0;
    for (double z : c.z2[v]) lse += std::exp(z - mx);
    lse = std::log(lse);
    const int y = g.labels[v];
    loss += (lse - (c.z2[v][static_cast<std::size_t>(y)] - mx)) * inv;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(c.z2[v][k] - mx - lse);
      dz2[v][k] = (p - (static_cast<int>(k) == y ? 1.0 : 0.0)) * inv;
    }
  }
  loss += 0.5 * weight_decay *
          (plain::frob_sq(l1.w1) + plain::frob_sq(l1.w2) + plain::frob_sq(l2.w1) +
           plain::frob_sq(l2.w2));
  if (grads == nullptr) return loss;

  const Matrix at = plain::transpose(g.adjacency);

  // Layer 2 parameter gradients.
  LayerWeights g2;
  g2.w1 = plain::matmul(plain::transpose(c.u2), dz2);
  g2.w2 = plain::matmul(plain::transpose(c.hd), dz2);
  g2.b.assign(classes, 0.0);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < classes; ++k) g2.b[k] += dz2[v][k];
  }

  // Backprop into the hidden activations.
  const Matrix w21t = plain::transpose(l2.w1);
  const Matrix w22t = plain::transpose(l2.w2);
  Matrix dhd = plain::matmul(plain::matmul(at, dz2), w21t);
  const Matrix dhd_self = plain::matmul(dz2, w22t);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < dhd[v].size(); ++k) dhd[v][k] += dhd_self[v][k];
  }
  if (dropout_scale != nullptr) {
    for (std::size_t v = 0; v < g.n; ++v) {
      for (std::size_t k = 0; k < dhd[v].size(); ++k) dhd[v][k] *= (*dropout_scale)[v][k];
    }
  }
  Matrix dz1 = dhd;
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < dz1[v].size(); ++k) {
      dz1[v][k] *= poly_derivative(act.coeffs, c.z1[v][k]);
    }
  }

  LayerWeights g1;
  g1.w1 = plain::matmul(plain::transpose(c.u1), dz1);
  g1.w2 = plain::matmul(plain::transpose(g.features), dz1);
  g1.b.assign(l1.b.size(), 0.0);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (std::size_t k = 0; k < g1.b.size(); ++k) g1.b[k] += dz1[v][k];
  }

  // Additive L2 on the weight matrices.
  for (std::size_t j = 0; j < l1.w1.size(); ++j) {
    for (std::size_t k = 0; k < l1.w1[0].size(); ++k) {
      g1.w1[j][k] += weight_decay * l1.w1[j][k];
      g1.w2[j][k] += weight_decay * l1.w2[j][k];
    }
  }
  for (std::size_t j = 0; j < l2.w1.size(); ++j) {
    for (std::size_t k = 0; k < l2.w1[0].size(); ++k) {
      g2.w1[j][k] += weight_decay * l2.w1[j][k];
      g2.w2[j][k] += weight_decay * l2.w2[j][k];
    }
  }

  grads->layers = {std::move(g1), std::move(g2)};
  return loss;
}

inline double toy_loss(const PlainGraph& g, const ModelWeights& w, const ActPoly& act,
                       const std::vector<std::size_t>& ids, double weight_decay) {
  return toy_loss_and_gradients(g, w, act, ids, weight_decay, nullptr);
}

namespace plain {

// Adam state for one tensor, stored flat.
struct AdamState {
  std::vector<double> m, v;
};

inline void adam_step(std::vector<double*> params, const std::vector<double>& grad,
                      AdamState& st, const TrainConfig& cfg, int t) {
  if (st.m.empty()) {
    st.m.assign(grad.size(), 0.0);
    st.v.assign(grad.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mh = st.m[i] / bc1;
    const double vh = st.v[i] / bc2;
    *params[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
  }
}

inline void flatten(LayerWeights& lw, std::vector<double*>& ptrs) {
  for (auto& row : lw.w1) {
    for (auto& x : row) ptrs.push_back(&x);
  }
  for (auto& row : lw.w2) {
    for (auto& x : row) ptrs.push_back(&x);
  }
  for (auto& x : lw.b) ptrs.push_back(&x);
}

inline std::vector<double> flatten_values(const LayerWeights& lw) {
  std::vector<double> out;
  for (const auto& row : lw.w1) out.insert(out.end(), row.begin(), row.end());
  for (const auto& row : lw.w2) out.insert(out.end(), row.begin(), row.end());
  out.insert(out.end(), lw.b.begin(), lw.b.end());
  return out;
}

}  // namespace plain

// Trains a fresh two-layer model on the graph's train split. Requires labels
// and a non-empty train split; early stopping needs a validation split and is
// skipped without one.
inline TrainResult train_toy(const PlainGraph& g, const TrainConfig& cfg) {
  g.validate();
  if (cfg.epochs < 1) throw ParameterError("epochs must be >= 1");
  if (cfg.hidden_dim < 1) throw ParameterError("hidden_dim must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ParameterError("dropout must lie in [0, 1)");
  }
  if (g.labels.empty()) throw DataError("training needs labels");
  if (g.splits.train.empty()) throw DataError("training needs a train split");
  for (std::size_t v : g.splits.train) {
    if (g.labels[v] < 0) throw DataError("train split contains unlabelled node");
  }

  int max_label = 0;
  for (int y : g.labels) max_label = std::max(max_label, y);
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  const std::size_t d0 = g.feature_dim();
  if (d0 == 0) throw DataError("training needs node features");

  std::mt19937_64 rng(cfg.seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    return [&rng, u]() mutable { return u(rng); };
  };

  ModelWeights w;
  {
    LayerWeights l1, l2;
    auto g1 = glorot(d0, cfg.hidden_dim);
    l1.w1.assign(d0, std::vector<double>(cfg.hidden_dim, 0.0));
    l1.w2.assign(d0, std::vector<double>(cfg.hidden_dim, 0.0));
    for (auto& row : l1.w1) {
      for (auto& x : row) x = g1();
    }
    for (auto& row : l1.w2) {
      for (auto& x : row) x = g1();
    }
    l1.b.assign(cfg.hidden_dim, 0.0);
    auto g2 = glorot(cfg.hidden_dim, classes);
    l2.w1.assign(cfg.hidden_dim, std::vector<double>(classes, 0.0));
    l2.w2.assign(cfg.hidden_dim, std::vector<double>(classes, 0.0));
    for (auto& row : l2.w1) {
      for (auto& x : row) x = g2();
    }
    for (auto& row : l2.w2) {
      for (auto& x : row) x = g2();
    }
    l2.b.assign(classes, 0.0);
    w.layers = {std::move(l1), std::move(l2)};
  }

  TrainResult result;
  plain::AdamState adam1, adam2;
  ModelWeights best = w;
  int stale = 0;
  std::bernoulli_distribution keep_unit(1.0 - cfg.dropout);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Matrix scale(g.n, std::vector<double>(cfg.hidden_dim, 1.0));
    if (cfg.dropout > 0.0) {
      const double boost = 1.0 / (1.0 - cfg.dropout);
      for (auto& row : scale) {
        for (auto& s : row) s = keep_unit(rng) ? boost : 0.0;
      }
    }

    ModelWeights grads;
    const double loss = toy_loss_and_gradients(g, w, cfg.activation, g.splits.train,
                                               cfg.weight_decay, &grads,
                                               cfg.dropout > 0.0 ? &scale : nullptr);
    result.train_loss.push_back(loss);

    std::vector<double*> p1, p2;
    plain::flatten(w.layers[0], p1);
    plain::flatten(w.layers[1], p2);
    plain::adam_step(p1, plain::flatten_values(grads.layers[0]), adam1, cfg, epoch);
    plain::adam_step(p2, plain::flatten_values(grads.layers[1]), adam2, cfg, epoch);
    result.epochs_run = epoch;

    if (!g.splits.val.empty()) {
      const Matrix logits = forward_plain(g, w, cfg.activation);
      const double acc = accuracy(logits, g.labels, g.splits.val);
      if (acc > result.best_val_accuracy || result.best_epoch < 0) {
        result.best_val_accuracy = acc;
        result.best_epoch = epoch;
        best = w;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
  }

  result.weights = g.splits.val.empty() ? std::move(w) : std::move(best);
  return result;
}

}  // namespace hegnn
