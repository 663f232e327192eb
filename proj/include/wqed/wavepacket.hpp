#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bands.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "lattice.hpp"
#include "linalg.hpp"

namespace wqed {

enum class PacketKind { Gaussian, Lorentzian, PlaneWave };

inline const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::Gaussian: return "gaussian";
    case PacketKind::Lorentzian: return "lorentzian";
    default: return "plane";
  }
}

// Gaussian: |psi(k)|^2 ~ exp(-(k-k0)^2 / 2 L_G^2), front-less, centred at x0.
// Lorentzian: psi(x) ~ exp(i k0 x) exp((x - x0) L_L) for x <= x0, zero beyond the front x0.
struct WavepacketSpec {
  PacketKind kind = PacketKind::Gaussian;
  double center_momentum = kPi / 2;
  double width = 0.01;
  double center_position = 0;
};

// Standard deviation of |psi(x)|^2 in sites.
inline double spatial_width(const WavepacketSpec& s) {
  if (s.kind == PacketKind::PlaneWave) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * s.width);
}

inline bool exceeds_narrowband_limit(const WavepacketSpec& s, const LatticeSpec& lat) {
  return s.kind != PacketKind::PlaneWave && s.width > 0.1 * 4.0 * lat.hopping;
}

inline void check_clearance(const WavepacketSpec& s, const LatticeSpec& lat, const std::vector<int>& emitter_sites) {
  if (s.kind == PacketKind::PlaneWave) return;
  if (!(s.width > 0)) throw InvalidSpec("packet width must be positive");
  const double w = spatial_width(s), x0 = s.center_position;
  const double lo = x0 - 5 * w;
  const double hi = s.kind == PacketKind::Gaussian ? x0 + 5 * w : x0;
  if (lo < 0 || hi > lat.n_sites - 1)
    throw PacketTooWide("packet support [" + fmt_fixed(lo) + ", " + fmt_fixed(hi) + "] leaves the lattice");
  for (int site : emitter_sites)
    if (std::abs(site - x0) < 5 * w)
      throw PacketTooWide("packet lies within five widths of emitter site " + std::to_string(site));
}

// Momentum grid k_m = k0 + 2 pi m / N, m = -N/2 .. N/2-1, relative to the packet centre.
inline std::vector<double> packet_momentum_grid(const WavepacketSpec& s, const LatticeSpec& lat) {
  const int N = lat.n_sites;
  std::vector<double> k(N);
  for (int m = 0; m < N; ++m) k[m] = s.center_momentum + 2.0 * kPi * (m - N / 2) / N;
  return k;
}

// Unit-norm samples of psi_G(k) on the packet grid.
inline CVector gaussian_momentum_samples(const WavepacketSpec& s, const LatticeSpec& lat) {
  const auto k = packet_momentum_grid(s, lat);
  const double L = s.width, dk = 2.0 * kPi / lat.n_sites;
  CVector c(k.size());
  for (std::size_t m = 0; m < k.size(); ++m) {
    const double q = k[m] - s.center_momentum;
    c[m] = std::pow(1.0 / (2.0 * kPi * L * L), 0.25) * std::exp(-q * q / (4.0 * L * L)) * std::sqrt(dk);
  }
  scale(c, 1.0 / norm2(c));
  return c;
}

// Unitary transform from the packet momentum grid to sites.
inline CVector momentum_to_sites(const CVector& c, const WavepacketSpec& s, const LatticeSpec& lat) {
  const auto k = packet_momentum_grid(s, lat);
  const int N = lat.n_sites;
  CVector psi(N, 0.0);
  const double inv = 1.0 / std::sqrt(double(N));
  for (std::size_t m = 0; m < k.size(); ++m) {
    if (std::abs(c[m]) < 1e-300) continue;
    for (int n = 0; n < N; ++n) psi[n] += c[m] * std::polar(inv, k[m] * (n - s.center_position));
  }
  return psi;
}

inline CVector sites_to_momentum(const CVector& psi, const WavepacketSpec& s, const LatticeSpec& lat) {
  const auto k = packet_momentum_grid(s, lat);
  const int N = lat.n_sites;
  CVector c(k.size(), 0.0);
  const double inv = 1.0 / std::sqrt(double(N));
  for (std::size_t m = 0; m < k.size(); ++m)
    for (int n = 0; n < N; ++n) c[m] += psi[n] * std::polar(inv, -k[m] * (n - s.center_position));
  return c;
}

inline CVector build_wavepacket(const WavepacketSpec& s, const LatticeSpec& lat,
                                const std::vector<int>& emitter_sites = {}) {
  check_clearance(s, lat, emitter_sites);
  const int N = lat.n_sites;
  CVector psi(N, 0.0);
  switch (s.kind) {
    case PacketKind::PlaneWave:
      for (int n = 0; n < N; ++n) psi[n] = std::polar(1.0 / std::sqrt(double(N)), s.center_momentum * n);
      break;
    case PacketKind::Gaussian:
      psi = momentum_to_sites(gaussian_momentum_samples(s, lat), s, lat);
      break;
    case PacketKind::Lorentzian:
      for (int n = 0; n < N && n <= s.center_position; ++n)
        psi[n] = std::sqrt(2.0 * s.width) * std::exp((n - s.center_position) * s.width) *
                 std::polar(1.0, s.center_momentum * n);
      break;
  }
  scale(psi, 1.0 / norm2(psi));
  return psi;
}

}  // namespace wqed
