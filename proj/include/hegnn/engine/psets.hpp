// SPDX-License-Identifier: Apache-2.0
//
// Activation polynomial sets: one polynomial per importance band, degrees
// strictly decreasing so more important nodes get a higher-fidelity
// activation. Coefficients are low-to-high degree.
//
// The bundled presets pair the exact low-degree activations (x^2, x) with
// least-squares ReLU approximations on [-6, 6] for degrees 3/5/7, computed
// on a symmetric 1201-point grid. Odd coefficients above degree 1 are exact
// zeros: the odd part of ReLU on a symmetric interval is x/2, which degree 1
// already captures. The degree-3 fit therefore has a zero cubic term; it is
// kept at its declared degree so evaluation cost tracks the band contract.

#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hegnn/errors.hpp"

namespace hegnn {

struct ActPoly {
  std::vector<double> coeffs;  // c0..cd

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

struct PolyActivationSet {
  std::vector<ActPoly> polys;  // band 1 (most important) first

  std::size_t m() const { return polys.size(); }
  int top_degree() const { return polys.front().degree(); }

  void validate() const {
    if (polys.empty()) throw ParameterError("activation set is empty");
    for (const auto& p : polys) {
      if (p.coeffs.empty()) throw ParameterError("activation polynomial has no coefficients");
    }
    for (std::size_t i = 0; i + 1 < polys.size(); ++i) {
      if (polys[i].degree() <= polys[i + 1].degree()) {
        throw ParameterError("activation degrees must be strictly decreasing: band " +
                             std::to_string(i + 1) + " has degree " +
                             std::to_string(polys[i].degree()) + ", band " +
                             std::to_string(i + 2) + " has degree " +
                             std::to_string(polys[i + 1].degree()));
      }
    }
  }
};

namespace act {

inline ActPoly relu_fit_deg7() {
  return {{0.25655629886282438, 0.50000000000000011, 0.19210268565675204, 0.0,
           -0.0065112475362194512, 0.0, 9.3895955494604087e-05, 0.0}};
}
inline ActPoly relu_fit_deg5() {
  return {{0.35185180967208535, 0.50000000000000033, 0.13660567023278145, 0.0,
           -0.0018941572006569865, 0.0}};
}
inline ActPoly relu_fit_deg3() {
  return {{0.56296640819743882, 0.50000000000000033, 0.078060112396275097, 0.0}};
}
inline ActPoly square() { return {{0.0, 0.0, 1.0}}; }
inline ActPoly identity() { return {{0.0, 1.0}}; }

}  // namespace act

// High fidelity: degrees (7, 5, 3).
inline PolyActivationSet pset1() {
  return {{act::relu_fit_deg7(), act::relu_fit_deg5(), act::relu_fit_deg3()}};
}
// Balanced: degrees (5, 3, 2).
inline PolyActivationSet pset2() {
  return {{act::relu_fit_deg5(), act::relu_fit_deg3(), act::square()}};
}
// Low cost: degrees (3, 2, 1).
inline PolyActivationSet pset3() {
  return {{act::relu_fit_deg3(), act::square(), act::identity()}};
}

inline PolyActivationSet preset_by_name(const std::string& name) {
  if (name == "pset1") return pset1();
  if (name == "pset2") return pset2();
  if (name == "pset3") return pset3();
  throw ParameterError("unknown activation preset \"" + name + "\" (expected pset1|pset2|pset3)");
}

// File format: [{"degree": d, "coeffs": [c0..cd]}, ...], most important band
// first.
inline PolyActivationSet load_polyset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_array()) throw ParseError(path + ": expected a top-level array");
  PolyActivationSet set;
  for (const auto& jp : j) {
    ActPoly p;
    p.coeffs = jp.at("coeffs").get<std::vector<double>>();
    if (jp.contains("degree") && jp["degree"].get<int>() != p.degree()) {
      throw ParseError(path + ": declared degree " + jp["degree"].dump() + " but " +
                       std::to_string(p.coeffs.size()) + " coefficients");
    }
    set.polys.push_back(std::move(p));
  }
  set.validate();
  return set;
}

inline void save_polyset(const PolyActivationSet& set, const std::string& path) {
  set.validate();
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : set.polys) {
    j.push_back({{"degree", p.degree()}, {"coeffs", p.coeffs}});
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

}  // namespace hegnn
