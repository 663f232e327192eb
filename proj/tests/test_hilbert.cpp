#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "wqed/basis.hpp"
#include "wqed/hamiltonian.hpp"
#include "wqed/observables.hpp"
#include "wqed/oracles.hpp"
#include "wqed/propagator.hpp"
#include "wqed/wavepacket.hpp"

using namespace wqed;

TEST(Basis, OneExcitationCount) {
  SectorBasis b({4, 1.0, 6.0}, {small_atom(1, 0.1, -6.6)}, 1);
  EXPECT_EQ(b.dimension(), 5u);
}

TEST(Basis, TwoExcitationCountAtFullScale) {
  SectorBasis b({2000, 1.0, 6.0}, {small_atom(1000, 0.1, -6.6)}, 2);
  EXPECT_EQ(b.dimension(), 2000u + 2000u * 2001u / 2);
}

TEST(Basis, TruncatedThreePhotonCountMatchesBruteForce) {
  const int N = 100, R = 6;
  SectorBasis b({N, 1.0, 6.0}, {small_atom(30, 0.1, -6.6), small_atom(60, 0.1, -11.8)}, 3, TruncationRule{R});
  const Block* three = b.find_block(0);
  ASSERT_NE(three, nullptr);
  ASSERT_EQ(three->n_photons, 3);
  std::size_t brute = 0;
  for (int a = 0; a < N; ++a)
    for (int c = a; c < N; ++c)
      for (int d = c; d < N; ++d)
        if (d - a <= R) ++brute;
  EXPECT_EQ(three->size, brute);
  EXPECT_LE(three->size, std::size_t(N) * (R + 1) * (2 * R + 1));
  // patterns: 00 (3 photons), 01 and 10 (2 photons), 11 (1 photon)
  const auto d = b.sector_dimensions();
  EXPECT_EQ(d[2], 2u * N * (N + 1) / 2);
  EXPECT_EQ(d[1], std::size_t(N));
}

TEST(Basis, IndexMapIsABijection) {
  SectorBasis b({9, 1.0, 6.0}, {small_atom(2, 0.1, -6.6), small_atom(6, 0.1, -11.8)}, 3, TruncationRule{4});
  std::set<std::int64_t> seen;
  b.for_each([&](std::size_t i, const Configuration& c) {
    EXPECT_EQ(b.index(c), static_cast<std::int64_t>(i));
    const Configuration back = b.config(i);
    EXPECT_EQ(back.pattern, c.pattern);
    EXPECT_EQ(back.sites, c.sites);
    int excited = 0;
    for (int e = 0; e < 2; ++e) excited += c.excited(e);
    EXPECT_EQ(c.n_photons + excited, 3);
    seen.insert(static_cast<std::int64_t>(i));
  });
  EXPECT_EQ(seen.size(), b.dimension());
}

TEST(Basis, BudgetIsEnforced) {
  EXPECT_THROW(SectorBasis({500, 1.0, 6.0}, {small_atom(1, 0.1, -6.6)}, 2, {}, 1000), BasisTooLarge);
}

TEST(Hamiltonian, Hermitian) {
  SectorBasis b({10, 1.0, 6.0},
                {giant_atom(3, 0.3, 0.4, -6.6, {-1, 0, 1}, {-1, 0, 1}), giant_atom(7, 0.05, 0.5, -11.8, {-1, 0, 1}, {1, 0, 1})},
                3, TruncationRule{4});
  EXPECT_LT(assemble_hamiltonian(b).hermiticity_error(), 1e-14);
}

// On a ring without coupling the two-photon spectrum contains the doublon band at every allowed momentum.
// The emitter enters as (detuning / 2) sigma_z, so its ground state shifts the photon energies by -detuning / 2.
TEST(Hamiltonian, RingSpectrumContainsDoublons) {
  const int N = 12;
  const double det = -20.0;
  SectorBasis b({N, 1.0, 6.0, Boundary::Ring}, {small_atom(0, 0.0, det)}, 2);
  const auto spec = oracle::dense_spectrum(assemble_hamiltonian(b));
  for (int m = 0; m < N; ++m) {
    const double e = oracle::doublon_ring_ed(N, m, 1.0, 6.0).energy - det / 2;
    double best = 1e9;
    for (int i = 0; i < spec.size(); ++i) best = std::min(best, std::abs(spec(i) - e));
    EXPECT_LT(best, 1e-10) << "m = " << m;
  }
}

namespace {

struct SmallRun {
  SectorBasis basis;
  StateVector state;
};

SmallRun scatter(const LatticeSpec& lat, const EmitterSpec& e, WavepacketSpec p, double T) {
  SmallRun r{SectorBasis(lat, {e}, 2), {}};
  const auto H = assemble_hamiltonian(r.basis);
  r.state = initial_state(r.basis, build_wavepacket(p, lat, {e.leftmost(), e.rightmost()}));
  EvolutionConfig cfg;
  cfg.total_time = T;
  r.state = evolve(r.state, H, cfg, nullptr);
  return r;
}

}  // namespace

TEST(Observables, ExcitationConservedAndPartitionUnity) {
  const LatticeSpec lat{100, 1.0, 6.0};
  const auto e = small_atom(55, 0.5, -6.633);
  SectorBasis basis(lat, {e}, 2);
  const auto H = assemble_hamiltonian(basis);
  StateVector s = initial_state(basis, build_wavepacket({PacketKind::Gaussian, kPi / 2, 0.1, 28}, lat, {55}));
  EvolutionConfig cfg;
  cfg.total_time = 30;
  cfg.time_step = 2;
  for (double t = 5; t <= 30; t += 5) cfg.snapshot_times.push_back(t);
  evolve(s, H, cfg, [&](const StateVector& x) {
    EXPECT_NEAR(excitation_number(basis, x), 2.0, 1e-10);
    const auto r = populations(basis, x, RegionGeometry::of(e));
    EXPECT_NEAR(r.P0 + r.P_I + r.P_II + r.P_III, 1.0, 1e-9);
    EXPECT_NEAR(r.t2 + r.r2 + r.in_region + r.P_uc + r.u_plus2 + r.u_minus2 + r.P0, 1.0, 1e-9);
    EXPECT_LE(r.P_D, r.P_II + 1e-15);
  });
}

TEST(Observables, MirrorSymmetrySwapsDoublonChannels) {
  const int N = 160;
  const LatticeSpec lat{N, 1.0, 6.0};
  const auto e = giant_atom(90, 0.4, 0.2 * kPi, -6.633, {-1, 0, 1}, {-1, 0, 1});
  const auto a = scatter(lat, e, {PacketKind::Gaussian, kPi / 2, 0.1, 50}, 50);
  const auto em = mirrored(e, N);
  const auto b = scatter(lat, em, {PacketKind::Gaussian, -kPi / 2, 0.1, double(N - 1 - 50)}, 50);
  const auto ra = populations(a.basis, a.state, RegionGeometry::of(e));
  const auto rb = populations(b.basis, b.state, RegionGeometry::of(em));
  EXPECT_GT(ra.u_plus2 + ra.u_minus2, 1e-2);
  EXPECT_NEAR(ra.t2, rb.r2, 1e-12);
  EXPECT_NEAR(ra.r2, rb.t2, 1e-12);
  EXPECT_NEAR(ra.u_plus2, rb.u_minus2, 1e-12);
  EXPECT_NEAR(ra.u_minus2, rb.u_plus2, 1e-12);
}

// Without nonlinearity the only two-photon weight comes from the bare emitter relaxing into its
// photon bound state: P_II = 1 - Z^2 with Z = 1 / (1 + g^2 |E| / (E^2 - 4J^2)^{3/2}),
// where E = detuning - g^2 / sqrt(E^2 - 4J^2) is the bound-state energy.
TEST(Observables, LinearWaveguideLeavesOnlyTheDressingCloud) {
  const LatticeSpec lat{260, 1.0, 0.0};
  for (double g : {0.1, 0.5}) {
    const double det = -6.633;
    double E = det;
    for (int i = 0; i < 100; ++i) E = det - g * g / std::sqrt(E * E - 4);
    const double Z = 1 / (1 + g * g * std::abs(E) / std::pow(E * E - 4, 1.5));
    const auto e = small_atom(130, g, det);
    const auto r = scatter(lat, e, {PacketKind::Gaussian, kPi / 2, 0.05, 60}, 60);
    const auto p = populations(r.basis, r.state, RegionGeometry::of(e));
    EXPECT_NEAR(p.P_II, 1 - Z * Z, 0.1 * (1 - Z * Z)) << "g = " << g;
  }
}

TEST(Observables, LobeMomentsOfAPacket) {
  const LatticeSpec lat{200, 1.0, 6.0};
  const auto e = small_atom(150, 0.0, -6.633);
  SectorBasis basis(lat, {e}, 2);
  const auto s = initial_state(basis, build_wavepacket({PacketKind::Gaussian, kPi / 2, 0.05, 60}, lat));
  const auto m = lobe_moments(basis, s, 1, 0, Side::All, RegionGeometry::of(e));
  EXPECT_NEAR(m.weight, 1.0, 1e-12);
  EXPECT_NEAR(m.mean, 60.0, 1e-6);
  EXPECT_NEAR(m.stddev, spatial_width({PacketKind::Gaussian, kPi / 2, 0.05, 60}), 1e-3);
  EXPECT_EQ(lobe_moments(basis, s, 2, 2, Side::All, RegionGeometry::of(e)).weight, 0.0);
}
