// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"

namespace hegnn {

using Matrix = std::vector<std::vector<double>>;

struct Splits {
  std::vector<std::size_t> train, val, test;
  bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

// Attributed graph: dense adjacency (0/1 or weighted), node features, and
// optional labels / train-val-test splits.
struct PlainGraph {
  std::size_t n = 0;
  Matrix adjacency;  // n x n
  Matrix features;   // n x d0
  std::vector<int> labels;  // empty when absent
  Splits splits;

  std::size_t feature_dim() const { return features.empty() ? 0 : features[0].size(); }

  std::vector<double> degrees() const {
    std::vector<double> deg(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t u = 0; u < n; ++u) deg[v] += adjacency[v][u];
    }
    return deg;
  }

  void validate() const {
    if (adjacency.size() != n) throw DataError("adjacency row count != n");
    for (std::size_t v = 0; v < n; ++v) {
      if (adjacency[v].size() != n) {
        throw DataError("adjacency row " + std::to_string(v) + " has wrong length");
      }
      for (double a : adjacency[v]) {
        if (!std::isfinite(a)) throw DataError("non-finite adjacency entry");
      }
    }
    if (!features.empty()) {
      if (features.size() != n) throw DataError("feature row count != n");
      const std::size_t d0 = features[0].size();
      for (std::size_t v = 0; v < n; ++v) {
        if (features[v].size() != d0) {
          throw DataError("feature row " + std::to_string(v) + " has wrong length");
        }
        for (double x : features[v]) {
          if (!std::isfinite(x)) throw DataError("non-finite feature entry");
        }
      }
    }
    if (!labels.empty() && labels.size() != n) throw DataError("label count != n");
    auto check_split = [&](const std::vector<std::size_t>& ids, const char* name) {
      for (std::size_t id : ids) {
        if (id >= n) {
          throw DataError(std::string(name) + " split references node " + std::to_string(id) +
                          " in a " + std::to_string(n) + "-node graph");
        }
      }
    };
    check_split(splits.train, "train");
    check_split(splits.val, "val");
    check_split(splits.test, "test");
  }
};

// Per-layer GNN parameters: neighbor-path weights W1, self-path weights W2,
// bias b. Layer l maps width dims[l] -> dims[l+1].
struct LayerWeights {
  Matrix w1;  // d_in x d_out
  Matrix w2;  // d_in x d_out
  std::vector<double> b;  // d_out
};

struct ModelWeights {
  std::vector<LayerWeights> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().w1.size(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().b.size(); }

  void validate() const {
    if (layers.empty()) throw ModelError("model has no layers");
    std::size_t prev_out = input_dim();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& lw = layers[l];
      auto dims_of = [l](const Matrix& m, const char* tag) {
        if (m.empty() || m[0].empty()) {
          throw ModelError("layer " + std::to_string(l) + ": empty " + tag);
        }
        for (const auto& row : m) {
          if (row.size() != m[0].size()) {
            throw ModelError("layer " + std::to_string(l) + ": ragged " + tag);
          }
        }
        return std::pair<std::size_t, std::size_t>{m.size(), m[0].size()};
      };
      auto [in1, out1] = dims_of(lw.w1, "W1");
      auto [in2, out2] = dims_of(lw.w2, "W2");
      if (in1 != in2 || out1 != out2) {
        throw ModelError("layer " + std::to_string(l) + ": W1/W2 shape mismatch");
      }
      if (in1 != prev_out) {
        throw ModelError("layer " + std::to_string(l) + ": input dim " + std::to_string(in1) +
                         " breaks the dimension chain (expected " + std::to_string(prev_out) + ")");
      }
      if (lw.b.size() != out1) {
        throw ModelError("layer " + std::to_string(l) + ": bias length != output dim");
      }
      prev_out = out1;
    }
  }
};

}  // namespace hegnn
