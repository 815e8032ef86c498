// SPDX-License-Identifier: Apache-2.0
//
// Plaintext reference forward pass: textbook float evaluation of the network
//   Z = A * H * W1 + H * W2 + b,  H' = act(Z)   (no activation after the
// final layer). This is the ground truth the encrypted pipelines are
// compared against, and the forward used by the toy trainer.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hegnn/engine/psets.hpp"
#include "hegnn/errors.hpp"
#include "hegnn/graph/types.hpp"

namespace hegnn {

// Standard Horner evaluation (highest coefficient first in the fold).
inline double poly_value(const std::vector<double>& coeffs, double x) {
  double acc = coeffs.back();
  for (std::size_t j = coeffs.size() - 1; j-- > 0;) acc = acc * x + coeffs[j];
  return acc;
}

inline double poly_derivative(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (std::size_t j = coeffs.size() - 1; j >= 1; --j) {
    acc = acc * x + coeffs[j] * static_cast<double>(j);
  }
  return acc;
}

namespace plain {

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Matrix out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a[i][j];
      if (aij == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) out[i][c] += aij * b[j][c];
    }
  }
  return out;
}

}  // namespace plain

// Forward pass with an arbitrary scalar activation.
inline Matrix forward_plain(const PlainGraph& g, const ModelWeights& w,
                            const std::function<double(double)>& act) {
  g.validate();
  w.validate();
  if (w.input_dim() != g.feature_dim()) {
    throw ModelError("model expects input dim " + std::to_string(w.input_dim()) +
                     " but the graph has " + std::to_string(g.feature_dim()));
  }
  Matrix h = g.features;
  for (std::size_t l = 0; l < w.layer_count(); ++l) {
    const LayerWeights& lw = w.layers[l];
    const Matrix agg = plain::matmul(g.adjacency, h);
    const Matrix nb = plain::matmul(agg, lw.w1);
    const Matrix self = plain::matmul(h, lw.w2);
    Matrix z(g.n, std::vector<double>(lw.b.size(), 0.0));
    for (std::size_t v = 0; v < g.n; ++v) {
      for (std::size_t k = 0; k < lw.b.size(); ++k) {
        z[v][k] = nb[v][k] + self[v][k] + lw.b[k];
      }
    }
    if (l + 1 < w.layer_count()) {
      for (auto& row : z) {
        for (auto& x : row) x = act(x);
      }
    }
    h = std::move(z);
  }
  return h;
}

// Convenience overload: polynomial activation.
inline Matrix forward_plain(const PlainGraph& g, const ModelWeights& w,
                            const ActPoly& act) {
  return forward_plain(g, w, [&act](double x) { return poly_value(act.coeffs, x); });
}

}  // namespace hegnn
