#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bands.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace wqed {

// One pseudo-coupling channel: photon site m coupled to a doublon centred at
// (m + n_tau) / 2 with amplitude sqrt(2) u0 g_tau e^{-i phi_tau} alpha^|m - n_tau|.
struct PgaChannel {
  int site = 0;
  double doublon_position = 0;
  cplx amplitude = 0;
};

struct PgaKernel {
  std::vector<int> sites;  // sorted, unique
  std::vector<PgaChannel> channels;
  std::vector<cplx> forward_coupling;   // sum over channels at each site of G e^{-i K_r x}
  std::vector<cplx> backward_coupling;  // same with e^{+i K_r x}
  double k0 = 0, K_r = 0;
  double v_k = 0, v_K = 0;
  int cutoff = 0;
  DoublonShape shape;
  double tail_weight = 0;  // coupling weight dropped by the cutoff, relative

  int pga_size() const { return static_cast<int>(sites.size()); }
};

inline PgaKernel build_kernel(const EmitterSpec& emitter, double k0, const LatticeSpec& lat, int cutoff) {
  if (cutoff < 0) throw InvalidSpec("kernel cutoff must be non-negative");
  if (emitter.couplings.empty()) throw InvalidSpec("emitter has no coupling points");
  PgaKernel k;
  k.k0 = k0;
  k.cutoff = cutoff;
  k.K_r = resonant_doublon_momentum(emitter.detuning, k0, lat);
  k.v_k = single_photon_velocity(k0, lat);
  k.v_K = doublon_velocity(k.K_r, lat);
  k.shape = doublon_shape(k.K_r, lat);
  const double a = k.shape.decay_factor;
  k.tail_weight = k.shape.degenerate ? 0.0 : 2.0 * std::pow(a, 2 * (cutoff + 1)) / (1.0 + a * a);
  std::map<int, int> index;
  for (const auto& cp : emitter.couplings)
    for (int m = cp.site - cutoff; m <= cp.site + cutoff; ++m) {
      const double u = k.shape.amplitude(m - cp.site);
      k.channels.push_back({m, 0.5 * (m + cp.site), std::sqrt(2.0) * u * std::polar(cp.strength, -cp.phase)});
      index[m] = 0;
    }
  for (auto& [site, i] : index) {
    i = static_cast<int>(k.sites.size());
    k.sites.push_back(site);
  }
  k.forward_coupling.assign(k.sites.size(), 0.0);
  k.backward_coupling.assign(k.sites.size(), 0.0);
  for (const auto& ch : k.channels) {
    const int i = index[ch.site];
    k.forward_coupling[i] += ch.amplitude * std::polar(1.0, -k.K_r * ch.doublon_position);
    k.backward_coupling[i] += ch.amplitude * std::polar(1.0, k.K_r * ch.doublon_position);
  }
  return k;
}

enum class Incidence { FromLeft, FromRight };

struct ScatteringAmplitudes {
  cplx t = 0, r = 0;
  cplx u_plus = 0, u_minus = 0;          // velocity corrected
  cplx u_plus_raw = 0, u_minus_raw = 0;  // doublon flux amplitudes before correction
  double v_k = 0, v_K = 0;
  std::vector<int> sites;
  std::vector<cplx> R, L;  // region amplitudes, region j lies left of sites[j]; size S + 1
  std::vector<cplx> P_plus_R, P_plus_L, P_minus_R, P_minus_L;
  double flux_residual = 0;
  double rcond = 0;

  double t2() const { return std::norm(t); }
  double r2() const { return std::norm(r); }
  double up2() const { return std::norm(u_plus); }
  double um2() const { return std::norm(u_minus); }
  double emitter_proxy() const { return 1.0 - (t2() + r2() + up2() + um2()); }
};

inline double flux_check(const ScatteringAmplitudes& a) {
  return a.v_k * (std::norm(a.t) + std::norm(a.r)) +
         a.v_K * (std::norm(a.u_plus_raw) + std::norm(a.u_minus_raw)) - a.v_k;
}

namespace detail {

// W(m, m') = sum over channel pairs of conj(G_a) G_b e^{i K_r |x_a - x_b|}.
inline Eigen::MatrixXcd interaction_matrix(const PgaKernel& k) {
  const int S = k.pga_size();
  std::map<int, int> index;
  for (int i = 0; i < S; ++i) index[k.sites[i]] = i;
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(S, S);
  for (const auto& a : k.channels)
    for (const auto& b : k.channels)
      W(index[a.site], index[b.site]) +=
          std::conj(a.amplitude) * b.amplitude * std::polar(1.0, k.K_r * std::abs(a.doublon_position - b.doublon_position));
  return W;
}

inline void check_kernel(const PgaKernel& k) {
  if (k.shape.degenerate || std::abs(k.v_K) < 1e-3)
    throw SingularSystem("doublon group velocity " + fmt_sci(k.v_K) + " at the band edge");
  if (std::abs(k.v_k) < 1e-3) throw SingularSystem("photon group velocity vanishes at k0");
}

inline void finish(const PgaKernel& k, const Eigen::VectorXcd& psi, ScatteringAmplitudes& out) {
  cplx fp = 0, fm = 0;
  for (int i = 0; i < k.pga_size(); ++i) {
    fp += k.forward_coupling[i] * psi(i);
    fm += k.backward_coupling[i] * psi(i);
  }
  const cplx pre(0, -1.0 / k.v_K);
  out.u_plus_raw = pre * fp;
  out.u_minus_raw = pre * fm;
  const double f = std::sqrt(k.v_K / k.v_k);
  out.u_plus = f * out.u_plus_raw;
  out.u_minus = f * out.u_minus_raw;
  out.v_k = k.v_k;
  out.v_K = k.v_K;
  out.sites = k.sites;
  out.flux_residual = flux_check(out);
}

}  // namespace detail

// Piecewise plane waves R_j e^{ikn} + L_j e^{-ikn} between kernel sites. Unknowns are
// the interior region amplitudes; the jumps at each site are fixed by the nonlocal source.
inline ScatteringAmplitudes solve_real_space(const PgaKernel& k, Incidence inc = Incidence::FromLeft) {
  detail::check_kernel(k);
  const int S = k.pga_size();
  const double q = k.k0, c = 1.0 / (k.v_k * k.v_K);
  const Eigen::MatrixXcd W = detail::interaction_matrix(k);
  const cplx R0 = inc == Incidence::FromLeft ? 1.0 : 0.0;
  const cplx LS = inc == Incidence::FromLeft ? 0.0 : 1.0;
  // Unknown vector: R_1..R_S at 0..S-1, L_0..L_{S-1} at S..2S-1.
  auto iR = [&](int j) { return j - 1; };
  auto iL = [&](int j) { return S + j; };
  // psi_j = 0.5 [(R_{j+1} + R_j) e^{iqs} + (L_j + L_{j+1}) e^{-iqs}] as coefficients plus constant.
  Eigen::MatrixXcd Psi = Eigen::MatrixXcd::Zero(S, 2 * S);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(S);
  for (int j = 0; j < S; ++j) {
    const cplx ep = std::polar(0.5, q * k.sites[j]), em = std::polar(0.5, -q * k.sites[j]);
    Psi(j, iR(j + 1)) += ep;
    if (j == 0) psi0(j) += ep * R0; else Psi(j, iR(j)) += ep;
    Psi(j, iL(j)) += em;
    if (j + 1 == S) psi0(j) += em * LS; else Psi(j, iL(j + 1)) += em;
  }
  const Eigen::MatrixXcd WPsi = c * W * Psi;
  const Eigen::VectorXcd Wpsi0 = c * W * psi0;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2 * S, 2 * S);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(2 * S);
  for (int j = 0; j < S; ++j) {
    const cplx ep = std::polar(1.0, q * k.sites[j]), em = std::polar(1.0, -q * k.sites[j]);
    // (R_{j+1} - R_j) e^{iqs} + c (W psi)_j = 0
    A.row(j) = WPsi.row(j);
    b(j) = -Wpsi0(j);
    A(j, iR(j + 1)) += ep;
    if (j == 0) b(j) += ep * R0; else A(j, iR(j)) -= ep;
    // (L_j - L_{j+1}) e^{-iqs} + c (W psi)_j = 0
    A.row(S + j) = WPsi.row(j);
    b(S + j) = -Wpsi0(j);
    A(S + j, iL(j)) += em;
    if (j + 1 == S) b(S + j) += em * LS; else A(S + j, iL(j + 1)) -= em;
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  ScatteringAmplitudes out;
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-12)) throw SingularSystem("real-space system has rcond " + fmt_sci(out.rcond));
  const Eigen::VectorXcd x = lu.solve(b);
  out.R.assign(S + 1, 0.0);
  out.L.assign(S + 1, 0.0);
  out.R[0] = R0;
  out.L[S] = LS;
  for (int j = 1; j <= S; ++j) out.R[j] = x(iR(j));
  for (int j = 0; j < S; ++j) out.L[j] = x(iL(j));
  const Eigen::VectorXcd psi = Psi * x + psi0;
  for (int j = 0; j < S; ++j) {
    const cplx ep = std::polar(1.0, q * k.sites[j]), em = std::polar(1.0, -q * k.sites[j]);
    out.P_plus_R.push_back(0.5 * (out.R[j + 1] + out.R[j]) * ep);
    out.P_plus_L.push_back(0.5 * (out.L[j] + out.L[j + 1]) * em);
    out.P_minus_R.push_back((out.R[j + 1] - out.R[j]) * ep);
    out.P_minus_L.push_back((out.L[j] - out.L[j + 1]) * em);
  }
  if (inc == Incidence::FromLeft) {
    out.t = out.R[S];
    out.r = out.L[0];
  } else {
    out.t = out.L[0];
    out.r = out.R[S];
  }
  detail::finish(k, psi, out);
  return out;
}

// Closed-form photon Green function turns the problem into one S x S system
// for the site amplitudes: (1 + c P W) psi = e^{+-i k0 s}, P_ab = e^{i k0 |s_a - s_b|}.
inline ScatteringAmplitudes solve_momentum_space(const PgaKernel& k, Incidence inc = Incidence::FromLeft) {
  detail::check_kernel(k);
  const int S = k.pga_size();
  const double q = k.k0, c = 1.0 / (k.v_k * k.v_K);
  const double dir = inc == Incidence::FromLeft ? 1.0 : -1.0;
  const Eigen::MatrixXcd W = detail::interaction_matrix(k);
  Eigen::MatrixXcd P(S, S);
  Eigen::VectorXcd rhs(S);
  for (int a = 0; a < S; ++a) {
    rhs(a) = std::polar(1.0, dir * q * k.sites[a]);
    for (int b = 0; b < S; ++b) P(a, b) = std::polar(1.0, q * std::abs(k.sites[a] - k.sites[b]));
  }
  const Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(S, S) + c * P * W;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  ScatteringAmplitudes out;
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-12)) throw SingularSystem("momentum-space system has rcond " + fmt_sci(out.rcond));
  const Eigen::VectorXcd psi = lu.solve(rhs);
  const Eigen::VectorXcd D = -c * (W * psi);
  cplx fwd = 0, bwd = 0;
  for (int a = 0; a < S; ++a) {
    fwd += std::polar(1.0, -dir * q * k.sites[a]) * D(a);
    bwd += std::polar(1.0, dir * q * k.sites[a]) * D(a);
  }
  out.t = 1.0 + fwd;
  out.r = bwd;
  out.P_plus_R.resize(S);
  for (int a = 0; a < S; ++a) out.P_plus_R[a] = psi(a);
  detail::finish(k, psi, out);
  return out;
}

struct SweepRow {
  std::vector<double> params;
  std::optional<ScatteringAmplitudes> amplitudes;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> argmax;  // row with the largest |u+|^2
};

using EmitterTemplate = std::function<EmitterSpec(const std::vector<double>&)>;

// Independent solves over the grid; row order follows the grid.
inline SweepResult sweep_solve(const EmitterTemplate& make, const std::vector<std::vector<double>>& grid, double k0,
                               const LatticeSpec& lat, int cutoff, int threads = 1) {
  SweepResult res;
  res.rows.resize(grid.size());
  parallel_for(
      grid.size(), threads,
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          auto& row = res.rows[i];
          row.params = grid[i];
          try {
            row.amplitudes = solve_real_space(build_kernel(make(grid[i]), k0, lat, cutoff));
          } catch (const PhysicsError& err) {
            row.error = err.name();
          }
        }
      },
      1);
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& a = res.rows[i].amplitudes;
    if (!a) continue;
    if (!res.argmax || a->up2() > res.rows[*res.argmax].amplitudes->up2()) res.argmax = i;
  }
  return res;
}

// Maximises f on [a, b] to the given resolution.
inline double golden_section_max(const std::function<double(double)>& f, double a, double b, double resolution) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > resolution) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace wqed
