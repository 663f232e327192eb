#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bands.hpp"
#include "basis.hpp"
#include "hamiltonian.hpp"
#include "oracles.hpp"
#include "pga.hpp"
#include "propagator.hpp"

namespace wqed {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;
  double limit = 0;
  std::string detail;
};

namespace detail {

inline CheckResult check_le(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

struct RandomSolve {
  EmitterSpec emitter;
  double k0 = 0;
  int cutoff = 0;
};

// Random emitters with detunings inside the doublon band, seeded for repeatability.
inline std::vector<RandomSolve> random_solves(const LatticeSpec& lat, int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ug(0.05, 0.5), uphi(-0.25 * kPi, 0.25 * kPi), uk(0.3 * kPi, 0.7 * kPi),
      uK(0.2, kPi - 0.2);
  std::uniform_int_distribution<int> ucut(0, 5), ushape(0, 2);
  std::vector<RandomSolve> out;
  for (int i = 0; i < count; ++i) {
    const double k0 = uk(rng), K = uK(rng), g = ug(rng), phi = uphi(rng);
    const double det = doublon_energy(K, lat) - single_photon_energy(k0, lat);
    const int cut = ucut(rng);
    EmitterSpec e;
    switch (ushape(rng)) {
      case 0: e = small_atom(0, g, det); break;
      case 1: e = giant_atom(0, g, phi, det, {-1, 0, 1}, {-1, 0, 1}); break;
      default: e = giant_atom(0, g, phi, det, {-2, 0, 3}, {1, -0.5, 2}, {1.0, 0.7, 1.3}); break;
    }
    out.push_back({e, k0, cut});
  }
  return out;
}

inline double amplitude_distance(const ScatteringAmplitudes& a, const ScatteringAmplitudes& b) {
  return std::max({std::abs(a.t - b.t), std::abs(a.r - b.r), std::abs(a.u_plus - b.u_plus),
                   std::abs(a.u_minus - b.u_minus)});
}

}  // namespace detail

// Oracle checks behind `wqed validate`. Each entry compares a production code
// path against an independent computation.
inline std::vector<CheckResult> run_validation_suite() {
  std::vector<CheckResult> out;
  const LatticeSpec lat{64, 1.0, 6.0};

  {
    double e_err = 0, a_err = 0;
    for (int m = 0; m <= 32; m += 2) {
      const auto ed = oracle::doublon_ring_ed(64, m, lat.hopping, lat.nonlinearity);
      const double K = 2 * kPi * m / 64;
      e_err = std::max(e_err, std::abs(ed.energy - doublon_energy(K, lat)) / std::abs(ed.energy));
      if (m != 32) a_err = std::max(a_err, std::abs(ed.alpha_fit - doublon_shape(K, lat).decay_factor));
    }
    out.push_back(detail::check_le("doublon energy vs ring ED (17 momenta)", e_err, 1e-8));
    out.push_back(detail::check_le("doublon decay factor vs ED fit", a_err, 1e-6));
  }

  {
    double dist = 0, flux = 0;
    for (const auto& rs : detail::random_solves(lat, 50, 20240601u)) {
      const auto k = build_kernel(rs.emitter, rs.k0, lat, rs.cutoff);
      const auto a = solve_real_space(k), b = solve_momentum_space(k);
      dist = std::max(dist, detail::amplitude_distance(a, b));
      flux = std::max({flux, std::abs(a.flux_residual), std::abs(b.flux_residual)});
    }
    out.push_back(detail::check_le("real-space vs momentum-space solver (50 random)", dist, 1e-8));
    out.push_back(detail::check_le("flux residual (50 random)", flux, 1e-10));
  }

  {
    double asym = 0;
    for (double g : {0.1, 0.3, 0.5}) {
      const auto a = solve_real_space(build_kernel(small_atom(0, g, -6.633), kPi / 2, lat, 0));
      asym = std::max(asym, std::abs(std::abs(a.u_plus) - std::abs(a.u_minus)));
    }
    out.push_back(detail::check_le("pointlike kernel |u+| = |u-|", asym, 1e-14));
  }

  {
    const auto e = giant_atom(30, 0.31, 0.05 * kPi, -6.633, {-1, 0, 1}, {-1, 0, 1});
    const auto a = solve_real_space(build_kernel(e, kPi / 2, lat, 3));
    const auto b = solve_real_space(build_kernel(mirrored(e, 64), kPi / 2, lat, 3), Incidence::FromRight);
    const double d = std::max(std::abs(a.up2() - b.um2()), std::abs(a.um2() - b.up2()));
    out.push_back(detail::check_le("mirror symmetry swaps u+ and u-", d, 1e-10));
  }

  {
    const LatticeSpec small{4, 1.0, 6.0};
    SectorBasis basis(small, {giant_atom(1, 0.4, 0.3, -6.5, {0, 1}, {1, -1})}, 2);
    const auto H = assemble_hamiltonian(basis);
    out.push_back(detail::check_le("Hamiltonian hermiticity", H.hermiticity_error(), 1e-15));
  }

  {
    const LatticeSpec two{2, 1.0, 6.0};
    SectorBasis basis(two, {small_atom(0, 0.5, -3.0)}, 2);
    const auto H = assemble_hamiltonian(basis);
    CVector psi(basis.dimension(), 0.0);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = cplx(std::cos(1.0 + i), std::sin(2.0 * i));
    scale(psi, 1.0 / norm2(psi));
    const CVector exact = oracle::dense_expm(H, psi, 10.0);
    EvolutionConfig cfg;
    cfg.time_step = 1.0;
    CVector cheb = psi;
    propagate(cheb, H, 10.0, cfg);
    cfg.method = Method::Krylov;
    CVector kry = psi;
    propagate(kry, H, 10.0, cfg);
    double d1 = 0, d2 = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      d1 = std::max(d1, std::abs(cheb[i] - exact[i]));
      d2 = std::max(d2, std::abs(kry[i] - exact[i]));
    }
    out.push_back(detail::check_le("Chebyshev vs dense expm (toy)", d1, 1e-10));
    out.push_back(detail::check_le("Krylov vs dense expm (toy)", d2, 1e-10));
  }

  {
    const LatticeSpec ring{128, 1.0, 0.0, Boundary::Ring};
    SectorBasis basis(ring, {small_atom(0, 0.0, -6.0)}, 1);
    const auto H = assemble_hamiltonian(basis);
    CVector photon(128);
    for (int n = 0; n < 128; ++n) photon[n] = std::exp(-std::pow(n - 40.0, 2) / 200.0) * std::polar(1.0, 0.5 * kPi * n);
    scale(photon, 1.0 / norm2(photon));
    const Block* b = basis.find_block(0);
    CVector psi(basis.dimension(), 0.0);
    for (int n = 0; n < 128; ++n) psi[b->offset + n] = photon[n];
    EvolutionConfig cfg;
    propagate(psi, H, 100.0, cfg);
    const CVector exact = oracle::free_photon_ring(photon, 1.0, 100.0);
    CVector got(photon.size());
    for (int n = 0; n < 128; ++n) got[n] = psi[b->offset + n];
    out.push_back(detail::check_le("free photon on ring vs exact momentum evolution", 1.0 - fidelity(got, exact), 1e-8));

    CVector back = psi;
    propagate(back, H, -100.0, cfg);
    CVector start(basis.dimension(), 0.0);
    for (int n = 0; n < 128; ++n) start[b->offset + n] = photon[n];
    out.push_back(detail::check_le("time reversal +t then -t", 1.0 - fidelity(back, start), 1e-8));
  }

  {
    const LatticeSpec strong{64, 1.0, 20.0};
    const double e = triplon_energy(0.0, strong, 8);
    out.push_back(detail::check_le("triplon vs strong-coupling estimate (U = 20J)",
                                   std::abs(e - oracle::triplon_strong_coupling(1.0, 20.0)), 1e-2));
  }
  return out;
}

}  // namespace wqed
