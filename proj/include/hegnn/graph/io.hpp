// SPDX-License-Identifier: Apache-2.0
//
// Graph and weight loaders.
//
// Graph JSON: {"n": int, "edges": [[u,v],...], "directed": bool,
//             "features": [[...],...], "labels": [...],
//             "splits": {"train": [...], "val": [...], "test": [...]}}
// Edge-list alternative: two whitespace columns per line ("u v"), '#'
// comments allowed; node features may sit in a sidecar CSV at
// <path>.features.csv, one comma-separated row per node id.
// Weights JSON: {"layers": [{"W1": [[...]], "W2": [[...]], "b": [...]},...]}.

#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hegnn/errors.hpp"
#include "hegnn/graph/types.hpp"

namespace hegnn {

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
  Matrix m;
  for (const auto& row : j) {
    if (!row.is_array()) throw ParseError(where + ": expected an array row");
    m.emplace_back();
    for (const auto& v : row) {
      if (!v.is_number()) throw ParseError(where + ": non-numeric entry");
      m.back().push_back(v.get<double>());
    }
  }
  return m;
}

inline void add_edge(PlainGraph& g, std::size_t u, std::size_t v, double w, bool directed,
                     const std::string& context) {
  if (u >= g.n || v >= g.n) {
    throw ParseError(context + ": edge (" + std::to_string(u) + ", " + std::to_string(v) +
                     ") references a node outside a " + std::to_string(g.n) + "-node graph");
  }
  g.adjacency[u][v] = w;
  if (!directed) g.adjacency[v][u] = w;
}

}  // namespace detail

inline PlainGraph load_graph_json(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  if (!j.contains("n") || !j["n"].is_number_unsigned()) {
    throw ParseError(path + ": missing or invalid \"n\"");
  }
  PlainGraph g;
  g.n = j["n"].get<std::size_t>();
  g.adjacency.assign(g.n, std::vector<double>(g.n, 0.0));

  const bool directed = j.value("directed", false);
  if (j.contains("edges")) {
    std::size_t idx = 0;
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw ParseError(path + ": edge " + std::to_string(idx) + " is not [u, v] or [u, v, w]");
      }
      const double w = e.size() == 3 ? e[2].get<double>() : 1.0;
      detail::add_edge(g, e[0].get<std::size_t>(), e[1].get<std::size_t>(), w, directed,
                       path + ": edge " + std::to_string(idx));
      ++idx;
    }
  }
  if (j.contains("features")) g.features = detail::matrix_from_json(j["features"], path + ": features");
  if (j.contains("labels")) {
    for (const auto& v : j["labels"]) g.labels.push_back(v.get<int>());
  }
  if (j.contains("splits")) {
    const auto& s = j["splits"];
    auto ids = [](const nlohmann::json& a) {
      return a.get<std::vector<std::size_t>>();
    };
    if (s.contains("train")) g.splits.train = ids(s["train"]);
    if (s.contains("val")) g.splits.val = ids(s["val"]);
    if (s.contains("test")) g.splits.test = ids(s["test"]);
  }
  g.validate();
  return g;
}

inline PlainGraph load_graph_edgelist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t max_id = 0;
  bool any_node = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;  // blank or comment-only line
    if (!(ls >> v)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected two node ids");
    }
    std::string trailing;
    if (ls >> trailing) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": trailing content \"" + trailing + "\"");
    }
    if (u < 0 || v < 0) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": negative node id");
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    max_id = std::max({max_id, edges.back().first, edges.back().second});
    any_node = true;
  }

  // Sidecar features fix the node count when they cover more nodes than the
  // largest edge endpoint (isolated tail nodes).
  Matrix features;
  {
    std::ifstream fin(path + ".features.csv");
    if (fin) {
      std::string fline;
      std::size_t flineno = 0;
      while (std::getline(fin, fline)) {
        ++flineno;
        if (fline.empty()) continue;
        features.emplace_back();
        std::istringstream fs(fline);
        std::string cell;
        while (std::getline(fs, cell, ',')) {
          try {
            features.back().push_back(std::stod(cell));
          } catch (const std::exception&) {
            throw ParseError(path + ".features.csv:" + std::to_string(flineno) +
                             ": bad number \"" + cell + "\"");
          }
        }
      }
    }
  }

  PlainGraph g;
  g.n = any_node ? max_id + 1 : 0;
  if (features.size() > g.n) g.n = features.size();
  g.adjacency.assign(g.n, std::vector<double>(g.n, 0.0));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    detail::add_edge(g, edges[i].first, edges[i].second, 1.0, /*directed=*/false,
                     path + ": edge " + std::to_string(i));
  }
  if (!features.empty()) {
    if (features.size() != g.n) {
      throw ParseError(path + ".features.csv: " + std::to_string(features.size()) +
                       " rows for a " + std::to_string(g.n) + "-node graph");
    }
    g.features = std::move(features);
  }
  g.validate();
  return g;
}

inline PlainGraph load_graph(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    return load_graph_json(path);
  }
  return load_graph_edgelist(path);
}

inline void save_graph(const PlainGraph& g, const std::string& path) {
  nlohmann::json j;
  j["n"] = g.n;
  j["directed"] = false;
  auto edges = nlohmann::json::array();
  for (std::size_t u = 0; u < g.n; ++u) {
    for (std::size_t v = u + 1; v < g.n; ++v) {
      if (g.adjacency[u][v] != 0.0) {
        if (g.adjacency[u][v] == 1.0) {
          edges.push_back({u, v});
        } else {
          edges.push_back({u, v, g.adjacency[u][v]});
        }
      }
    }
  }
  j["edges"] = edges;
  if (!g.features.empty()) j["features"] = g.features;
  if (!g.labels.empty()) j["labels"] = g.labels;
  if (!g.splits.empty()) {
    j["splits"] = {{"train", g.splits.train}, {"val", g.splits.val}, {"test", g.splits.test}};
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

inline ModelWeights load_weights(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw ModelError(path + ": missing \"layers\" array");
  }
  ModelWeights w;
  std::size_t l = 0;
  for (const auto& jl : j["layers"]) {
    LayerWeights lw;
    const std::string where = path + ": layer " + std::to_string(l);
    if (!jl.contains("W1") || !jl.contains("W2") || !jl.contains("b")) {
      throw ModelError(where + ": needs W1, W2, b");
    }
    lw.w1 = detail::matrix_from_json(jl["W1"], where + " W1");
    lw.w2 = detail::matrix_from_json(jl["W2"], where + " W2");
    lw.b = jl["b"].get<std::vector<double>>();
    w.layers.push_back(std::move(lw));
    ++l;
  }
  w.validate();
  return w;
}

inline void save_weights(const ModelWeights& w, const std::string& path) {
  w.validate();
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const auto& lw : w.layers) {
    j["layers"].push_back({{"W1", lw.w1}, {"W2", lw.w2}, {"b", lw.b}});
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

}  // namespace hegnn
