#include <gtest/gtest.h>

#include <cmath>

#include "wqed/pga.hpp"
#include "wqed/validation.hpp"

using namespace wqed;

namespace {
const LatticeSpec kLat{64, 1.0, 6.0};
const double kDet = -6.633;
}  // namespace

TEST(Kernel, SupportSizes) {
  EXPECT_EQ(build_kernel(small_atom(0, 0.3, kDet), kPi / 2, kLat, 3).pga_size(), 7);
  const auto point = build_kernel(small_atom(0, 0.3, kDet), kPi / 2, kLat, 0);
  ASSERT_EQ(point.pga_size(), 1);
  EXPECT_NEAR(std::abs(point.channels[0].amplitude), std::sqrt(2.0) * 0.3 * point.shape.normalization, 1e-15);
  const auto rga = build_kernel(giant_atom(10, 0.3, 0.2, kDet, {-1, 0, 1}, {-1, 0, 1}), kPi / 2, kLat, 3);
  EXPECT_EQ(rga.sites.front(), 10 - 1 - 3);
  EXPECT_EQ(rga.sites.back(), 10 + 1 + 3);
}

TEST(Kernel, CouplingsDecayWithLocalisationLength) {
  const auto k = build_kernel(small_atom(0, 0.3, kDet), kPi / 2, kLat, 5);
  for (const auto& ch : k.channels)
    EXPECT_LE(std::abs(ch.amplitude), std::abs(k.channels[5].amplitude) * std::exp(-std::abs(ch.site) / k.shape.localization_length) * (1 + 1e-12));
  EXPECT_LT(build_kernel(small_atom(0, 0.3, kDet), kPi / 2, kLat, 3).tail_weight, 1e-3);
}

TEST(Kernel, GiantAtomAtZeroPhaseIsCoherentSum) {
  const auto rga = build_kernel(giant_atom(10, 0.3, 0.0, kDet, {-1, 0, 1}, {-1, 0, 1}), kPi / 2, kLat, 2);
  std::vector<cplx> sum(rga.sites.size(), 0.0);
  for (int off : {-1, 0, 1}) {
    const auto s = build_kernel(small_atom(10 + off, 0.3, kDet), kPi / 2, kLat, 2);
    for (std::size_t i = 0; i < s.sites.size(); ++i) sum[s.sites[i] - rga.sites.front()] += s.forward_coupling[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(std::abs(rga.forward_coupling[i] - sum[i]), 0.0, 1e-14);
}

// Single-site scatterer: t = 1/(1 + gamma), r = -gamma/(1 + gamma), |u+-|^2 = gamma/(1 + gamma)^2
// with gamma = G^2 / (v_k v_K) and G = sqrt(2) g u0.
TEST(Solver, PointlikeClosedForm) {
  for (double g : {0.1, 0.3, 0.5}) {
    const auto k = build_kernel(small_atom(0, g, kDet), kPi / 2, kLat, 0);
    const auto a = solve_real_space(k);
    const double G = std::sqrt(2.0) * g * k.shape.normalization;
    const double gam = G * G / (k.v_k * k.v_K);
    EXPECT_NEAR(a.t2(), 1 / std::pow(1 + gam, 2), 1e-12);
    EXPECT_NEAR(a.r2(), gam * gam / std::pow(1 + gam, 2), 1e-12);
    EXPECT_NEAR(a.up2(), gam / std::pow(1 + gam, 2), 1e-12);
    EXPECT_EQ(std::abs(a.u_plus), std::abs(a.u_minus));
  }
}

TEST(Solver, DualFormulationsAgree) {
  for (const auto& rs : detail::random_solves(kLat, 50, 7u)) {
    const auto k = build_kernel(rs.emitter, rs.k0, kLat, rs.cutoff);
    const auto a = solve_real_space(k), b = solve_momentum_space(k);
    EXPECT_LT(detail::amplitude_distance(a, b), 1e-8);
    EXPECT_LT(std::abs(a.flux_residual), 1e-10);
    EXPECT_LT(std::abs(b.flux_residual), 1e-10);
    for (double p : {a.t2(), a.r2(), a.up2(), a.um2()}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0 + 1e-12);
    }
  }
}

TEST(Solver, WeakCouplingTransmits) {
  const auto a = solve_real_space(build_kernel(small_atom(0, 0.0, kDet), kPi / 2, kLat, 3));
  EXPECT_NEAR(a.t2(), 1.0, 1e-15);
  EXPECT_NEAR(a.up2() + a.um2() + a.r2(), 0.0, 1e-15);
}

TEST(Solver, FiniteRangeBreaksForwardBackwardSymmetry) {
  const auto a = solve_real_space(build_kernel(small_atom(0, 0.4, kDet), kPi / 2, kLat, 3));
  EXPECT_GT(std::abs(a.up2() - a.um2()), 1e-3);
}

TEST(Solver, MirrorSwapsDoublonChannels) {
  const auto e = giant_atom(20, 0.31, 0.05 * kPi, kDet, {-1, 0, 1}, {-1, 0, 1});
  const auto a = solve_real_space(build_kernel(e, kPi / 2, kLat, 3));
  const auto b = solve_real_space(build_kernel(mirrored(e, 64), kPi / 2, kLat, 3), Incidence::FromRight);
  EXPECT_NEAR(a.up2(), b.um2(), 1e-10);
  EXPECT_NEAR(a.um2(), b.up2(), 1e-10);
  EXPECT_NEAR(a.t2(), b.t2(), 1e-10);
}

TEST(Solver, ContinuousInCoupling) {
  for (double g = 0.05; g < 0.5; g += 0.05) {
    const auto a = solve_real_space(build_kernel(small_atom(0, g, kDet), kPi / 2, kLat, 3));
    const auto b = solve_real_space(build_kernel(small_atom(0, g + 1e-4, kDet), kPi / 2, kLat, 3));
    EXPECT_LT(std::abs(a.t2() - b.t2()), 1e-2);
    EXPECT_LT(std::abs(a.up2() - b.up2()), 1e-2);
    EXPECT_LT(std::abs(a.um2() - b.um2()), 1e-2);
    EXPECT_LT(std::abs(a.r2() - b.r2()), 1e-2);
  }
}

// Beyond cutoff 5 the dropped couplings are of order alpha^6 ~ 1e-4 of the on-site one.
TEST(Solver, CutoffConvergesBeyondFive) {
  for (double g : {0.1, 0.3, 0.5}) {
    const auto a = solve_real_space(build_kernel(small_atom(0, g, kDet), kPi / 2, kLat, 5));
    const auto b = solve_real_space(build_kernel(small_atom(0, g, kDet), kPi / 2, kLat, 9));
    EXPECT_LT(detail::amplitude_distance(a, b), 2e-4);
  }
}

TEST(Solver, BandEdgeIsRejected) {
  // Resonance just below the top of the doublon band, where v_K vanishes.
  EXPECT_THROW(solve_real_space(build_kernel(small_atom(0, 0.3, -6.0 - 1e-8), kPi / 2, kLat, 3)), SingularSystem);
  EXPECT_THROW(build_kernel(small_atom(0, 0.3, -3.0), kPi / 2, kLat, 3), OffResonant);
}

TEST(Sweep, GoldenSectionFindsMaximum) {
  const double x = golden_section_max([](double t) { return -std::pow(t - 0.37, 2); }, 0.0, 1.0, 1e-6);
  EXPECT_NEAR(x, 0.37, 1e-6);
}

TEST(Sweep, ArgmaxAndErrorRows) {
  std::vector<std::vector<double>> grid{{0.1}, {0.3}, {0.5}};
  const auto res = sweep_solve([](const std::vector<double>& p) { return small_atom(0, p[0], kDet); }, grid, kPi / 2,
                               kLat, 0, 2);
  ASSERT_TRUE(res.argmax);
  EXPECT_EQ(*res.argmax, 2u);  // pointlike u+ = gamma / (1 + gamma)^2 grows until gamma = 1
  const auto bad = sweep_solve([](const std::vector<double>&) { return small_atom(0, 0.1, -3.0); }, {{0.0}}, kPi / 2,
                               kLat, 0);
  EXPECT_FALSE(bad.argmax);
  EXPECT_EQ(bad.rows[0].error, "OffResonant");
}

TEST(Validation, SuiteIsGreen) {
  for (const auto& c : run_validation_suite()) EXPECT_TRUE(c.passed) << c.name << " value " << c.value;
}
