#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wqed {

enum class Boundary { Open, Ring };

struct LatticeSpec {
  int n_sites = 0;
  double hopping = 1.0;
  double nonlinearity = 0.0;
  Boundary boundary = Boundary::Open;

  // Scenario-level check. Oracles and toy problems may use fewer sites.
  void validate() const {
    if (n_sites < 8) throw InvalidSpec("lattice needs at least 8 sites");
    if (!(hopping > 0)) throw InvalidSpec("hopping must be positive");
    if (!(nonlinearity >= 0)) throw InvalidSpec("nonlinearity must be non-negative");
  }
};

struct CouplingPoint {
  int site = 0;
  double strength = 0.0;
  double phase = 0.0;
};

struct EmitterSpec {
  double detuning = 0.0;
  std::vector<CouplingPoint> couplings;

  int leftmost() const {
    int s = couplings.front().site;
    for (const auto& c : couplings) s = std::min(s, c.site);
    return s;
  }
  int rightmost() const {
    int s = couplings.front().site;
    for (const auto& c : couplings) s = std::max(s, c.site);
    return s;
  }

  void validate(const LatticeSpec& lattice) const {
    if (couplings.empty()) throw InvalidSpec("emitter has no coupling points");
    for (const auto& c : couplings) {
      if (c.site < 0 || c.site >= lattice.n_sites)
        throw InvalidSpec("coupling site " + std::to_string(c.site) + " outside lattice");
      if (!(c.strength >= 0)) throw InvalidSpec("coupling strength must be non-negative");
    }
    if (!(std::abs(detuning) > 2 * lattice.hopping))
      throw InvalidSpec("emitter must be far detuned: |detuning| > 2J");
  }
};

// Single-point emitter.
inline EmitterSpec small_atom(int site, double g, double detuning) {
  return EmitterSpec{detuning, {{site, g, 0.0}}};
}

// Coupling points at site + offsets[i] with strength g * strength_pattern[i]
// and phase phi * phase_pattern[i].
inline EmitterSpec giant_atom(int site, double g, double phi, double detuning,
                              const std::vector<int>& offsets,
                              const std::vector<double>& phase_pattern,
                              const std::vector<double>& strength_pattern = {}) {
  EmitterSpec e{detuning, {}};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double s = strength_pattern.empty() ? 1.0 : strength_pattern.at(i);
    const double p = phase_pattern.empty() ? 0.0 : phase_pattern.at(i);
    e.couplings.push_back({site + offsets[i], g * s, phi * p});
  }
  return e;
}

inline EmitterSpec mirrored(const EmitterSpec& e, int n_sites) {
  EmitterSpec m = e;
  for (auto& c : m.couplings) c.site = n_sites - 1 - c.site;
  std::reverse(m.couplings.begin(), m.couplings.end());
  return m;
}

}  // namespace wqed
