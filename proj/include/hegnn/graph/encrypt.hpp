// SPDX-License-Identifier: Apache-2.0
//
// Packs a graph for SIMD evaluation: adjacency by generalized diagonals
// (diagonal d, slot v = A[v, (v+d) mod n]), features by column. Nodes occupy
// slots 0..n-1; every remaining slot is zero, which downstream arithmetic
// preserves.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"
#include "hegnn/graph/types.hpp"

namespace hegnn {

template <class Backend>
struct EncGraph {
  std::vector<typename Backend::Ciphertext> adj_diagonals;  // size n
  std::vector<typename Backend::Ciphertext> feature_cols;   // size d0
  std::size_t n = 0;
  std::size_t d0 = 0;
};

template <class Backend>
EncGraph<Backend> encrypt_graph(Backend& backend, const PlainGraph& g,
                                const typename Backend::KeySet& keys) {
  g.validate();
  const std::size_t slots = backend.params().slot_count();
  if (g.n > slots) {
    throw CapacityError("graph has " + std::to_string(g.n) + " nodes but only " +
                        std::to_string(slots) + " slots are available");
  }
  EncGraph<Backend> enc;
  enc.n = g.n;
  enc.d0 = g.feature_dim();

  std::vector<double> slot_vec(g.n);
  for (std::size_t d = 0; d < g.n; ++d) {
    for (std::size_t v = 0; v < g.n; ++v) slot_vec[v] = g.adjacency[v][(v + d) % g.n];
    enc.adj_diagonals.push_back(backend.encrypt(slot_vec, keys));
  }
  for (std::size_t j = 0; j < enc.d0; ++j) {
    for (std::size_t v = 0; v < g.n; ++v) slot_vec[v] = g.features[v][j];
    enc.feature_cols.push_back(backend.encrypt(slot_vec, keys));
  }
  return enc;
}

// Test/inspection helper: reverses the packing.
template <class Backend>
PlainGraph decrypt_graph(const Backend& backend, const EncGraph<Backend>& enc,
                         const typename Backend::KeySet& keys) {
  PlainGraph g;
  g.n = enc.n;
  g.adjacency.assign(g.n, std::vector<double>(g.n, 0.0));
  for (std::size_t d = 0; d < enc.adj_diagonals.size(); ++d) {
    const auto slots = backend.decrypt(enc.adj_diagonals[d], keys);
    for (std::size_t v = 0; v < g.n; ++v) g.adjacency[v][(v + d) % g.n] = slots[v];
  }
  if (!enc.feature_cols.empty()) {
    g.features.assign(g.n, std::vector<double>(enc.d0, 0.0));
    for (std::size_t j = 0; j < enc.feature_cols.size(); ++j) {
      const auto slots = backend.decrypt(enc.feature_cols[j], keys);
      for (std::size_t v = 0; v < g.n; ++v) g.features[v][j] = slots[v];
    }
  }
  return g;
}

}  // namespace hegnn
