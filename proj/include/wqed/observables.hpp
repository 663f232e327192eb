#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <string>
#include <vector>

#include "bands.hpp"
#include "basis.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "linalg.hpp"

namespace wqed {

struct StateVector {
  CVector amplitudes;
  double time = 0;
};

// Packet in the one-photon block with every emitter excited.
inline StateVector initial_state(const SectorBasis& basis, const CVector& packet) {
  const Block* b = basis.find_block(basis.all_excited_pattern());
  if (!b || b->n_photons != 1)
    throw InvalidSpec("initial state needs exactly one photon with all emitters excited");
  if (packet.size() != static_cast<std::size_t>(basis.lattice().n_sites))
    throw InvalidSpec("packet length does not match the lattice");
  StateVector s;
  s.amplitudes.assign(basis.dimension(), 0.0);
  const double nrm = norm2(packet);
  for (std::size_t n = 0; n < packet.size(); ++n) s.amplitudes[b->offset + n] = packet[n] / nrm;
  return s;
}

inline std::vector<double> photon_number_map(const SectorBasis& basis, const StateVector& psi) {
  std::vector<double> map(basis.lattice().n_sites, 0.0);
  basis.for_each([&](std::size_t i, const Configuration& c) {
    const double w = std::norm(psi.amplitudes[i]);
    if (w == 0) return;
    for (int k = 0; k < c.n_photons; ++k) map[c.sites[k]] += w;
  });
  return map;
}

inline double excitation_number(const SectorBasis& basis, const StateVector& psi) {
  double x = 0;
  basis.for_each([&](std::size_t i, const Configuration& c) {
    x += std::norm(psi.amplitudes[i]) * (c.n_photons + __builtin_popcount(c.pattern));
  });
  return x;
}

inline double spread(const Configuration& c) {
  return c.n_photons == 0 ? 0 : c.sites[c.n_photons - 1] - c.sites[0];
}

inline double center_of_mass(const Configuration& c) {
  double s = 0;
  for (int i = 0; i < c.n_photons; ++i) s += c.sites[i];
  return c.n_photons ? s / c.n_photons : 0;
}

// Region divider: the outermost coupling points of the reference emitter.
struct RegionGeometry {
  int lo = 0;
  int hi = 0;
  static RegionGeometry of(const EmitterSpec& e) { return {e.leftmost(), e.rightmost()}; }
};

struct PopulationCutoffs {
  int doublon_spread = 2;
  int triplon_spread = 2;
  double overlap_threshold = 1e-3;
};

struct PopulationReport {
  double P0 = 0;     // no photons
  double P_I = 0;    // one photon
  double P_II = 0;   // two photons
  double P_D = 0;    // two photons within the doublon cutoff
  double P_III = 0;  // three photons
  double P_T = 0;    // three photons within the triplon cutoff
  double P_uc = 0;   // P_II - P_D
  std::vector<double> emitter_excited;
  double t2 = 0, r2 = 0, u_plus2 = 0, u_minus2 = 0;
  double in_region = 0;  // one-photon or doublon weight between the dividers
  double total = 0;
};

inline PopulationReport populations(const SectorBasis& basis, const StateVector& psi, RegionGeometry geo,
                                    PopulationCutoffs cut = {}, bool check_overlap = false) {
  PopulationReport r;
  r.emitter_excited.assign(basis.emitters().size(), 0.0);
  basis.for_each([&](std::size_t i, const Configuration& c) {
    const double w = std::norm(psi.amplitudes[i]);
    if (w == 0) return;
    r.total += w;
    for (std::size_t e = 0; e < r.emitter_excited.size(); ++e)
      if (c.excited(static_cast<int>(e))) r.emitter_excited[e] += w;
    const double x = center_of_mass(c);
    switch (c.n_photons) {
      case 0:
        r.P0 += w;
        break;
      case 1:
        r.P_I += w;
        if (x > geo.hi) r.t2 += w;
        else if (x < geo.lo) r.r2 += w;
        else r.in_region += w;
        break;
      case 2:
        r.P_II += w;
        if (spread(c) <= cut.doublon_spread) {
          r.P_D += w;
          if (x > geo.hi) r.u_plus2 += w;
          else if (x < geo.lo) r.u_minus2 += w;
          else r.in_region += w;
        }
        break;
      default:
        r.P_III += w;
        if (spread(c) <= cut.triplon_spread) r.P_T += w;
    }
  });
  r.P_uc = r.P_II - r.P_D;
  if (check_overlap && r.in_region > cut.overlap_threshold)
    throw RegionOverlap("weight " + fmt_sci(r.in_region) + " remains between the region dividers");
  return r;
}

enum class Side { Left, Right, All };

struct LobeMoments {
  double weight = 0;
  double mean = 0;
  double stddev = 0;
};

// Intensity-weighted centre-of-mass statistics of the n-photon configurations
// with spread <= max_spread on one side of the dividers.
inline LobeMoments lobe_moments(const SectorBasis& basis, const StateVector& psi, int photons, int max_spread,
                                Side side, RegionGeometry geo) {
  double w0 = 0, w1 = 0, w2 = 0;
  for (const auto& b : basis.blocks()) {
    if (b.n_photons != photons) continue;
    basis.for_each_in_block(b, [&](std::size_t i, const Configuration& c) {
      if (spread(c) > max_spread) return;
      const double x = center_of_mass(c);
      if ((side == Side::Right && x <= geo.hi) || (side == Side::Left && x >= geo.lo)) return;
      const double w = std::norm(psi.amplitudes[i]);
      w0 += w;
      w1 += w * x;
      w2 += w * x * x;
    });
  }
  LobeMoments m;
  m.weight = w0;
  if (w0 > 0) {
    m.mean = w1 / w0;
    m.stddev = std::sqrt(std::max(0.0, w2 / w0 - m.mean * m.mean));
  }
  return m;
}

// Overlaps <K|psi> with lattice doublon modes built from the analytic shape.
// Each relative distance r contributes a zero-padded DFT over its N - r centre
// positions, so on the grid 2 pi m / N the total weight never exceeds P_II.
inline CVector project_onto_doublon_modes(const SectorBasis& basis, const StateVector& psi,
                                          const std::vector<double>& K_grid, std::uint32_t pattern) {
  const Block* b = basis.find_block(pattern);
  if (!b || b->n_photons != 2) throw InvalidSpec("projection needs a two-photon block");
  const auto& lat = basis.lattice();
  const int N = lat.n_sites;
  CVector out(K_grid.size(), 0.0);
  const double inv = 1.0 / std::sqrt(double(N));
  for (std::size_t q = 0; q < K_grid.size(); ++q) {
    const double K = K_grid[q];
    const auto shape = doublon_shape(K, lat);
    cplx acc = 0;
    for (int r = 0; r < N; ++r) {
      const double w = r == 0 ? shape.amplitude(0) : std::sqrt(2.0) * shape.amplitude(r);
      if (w < 1e-14) break;
      cplx br = 0;
      for (int n1 = 0; n1 + r < N; ++n1) {
        const std::int64_t idx = static_cast<std::int64_t>(b->offset) +
                                 SectorBasis::rank_in_block(*b, {n1, n1 + r, 0}, N);
        br += psi.amplitudes[idx] * std::polar(inv, -K * (n1 + 0.5 * r));
      }
      acc += w * br;
    }
    out[q] = acc;
  }
  return out;
}

inline std::vector<double> dft_grid(int n_sites) {
  std::vector<double> g(n_sites);
  for (int m = 0; m < n_sites; ++m) g[m] = 2.0 * kPi * (m - n_sites / 2) / n_sites;
  return g;
}

}  // namespace wqed
