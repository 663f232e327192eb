#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "hamiltonian.hpp"
#include "linalg.hpp"
#include "observables.hpp"
#include "parallel.hpp"

namespace wqed {

enum class Method { Chebyshev, Krylov };

struct EvolutionConfig {
  double time_step = 5.0;
  double total_time = 0.0;
  Method method = Method::Chebyshev;
  double tolerance = 1e-10;
  std::optional<std::pair<double, double>> spectral_bounds;
  std::vector<double> snapshot_times;
  int krylov_dim = 30;
  int max_order = 20000;
  int threads = 1;
  bool check_invariants = true;

  void validate() const {
    if (!(tolerance > 1e-14 && tolerance <= 1e-6)) throw InvalidSpec("tolerance must lie in (1e-14, 1e-6]");
    if (!(time_step > 0)) throw InvalidSpec("time step must be positive");
  }
};

// Lanczos extremes widened by their residuals plus 5% of the spectral width,
// then clipped to the Gershgorin enclosure.
inline std::pair<double, double> estimate_spectral_bounds(const SparseOperator& H, int max_iter = 200,
                                                          int threads = 1) {
  const auto [glo, ghi] = H.gershgorin();
  if (H.dimension == 0) return {0.0, 0.0};
  CVector start(H.dimension);
  for (std::size_t i = 0; i < H.dimension; ++i)
    start[i] = cplx(1.0 + 0.3 * std::cos(0.7 * double(i)), 0.2 * std::sin(1.3 * double(i)));
  const auto res = lanczos_extremes([&](const CVector& x, CVector& y) { H.apply(x, y, threads); }, start,
                                    max_iter, 1e-6, false);
  const double width = std::max(res.highest - res.lowest, 1e-12 * std::max(1.0, std::abs(res.highest)));
  if (!res.converged && std::max(res.lowest_residual, res.highest_residual) > 0.05 * width)
    throw NoConvergence("spectral bound estimate did not converge in " + std::to_string(max_iter) + " iterations");
  const double lo = res.lowest - res.lowest_residual - 0.05 * width;
  const double hi = res.highest + res.highest_residual + 0.05 * width;
  return {std::max(lo, glo), std::min(hi, ghi)};
}

struct EvolutionStats {
  long steps = 0;
  long matvecs = 0;
  double max_norm_drift = 0;
  double max_energy_drift = 0;
};

class Propagator {
 public:
  Propagator(const SparseOperator& H, EvolutionConfig cfg) : H_(H), cfg_(std::move(cfg)) {
    cfg_.validate();
    bounds_ = cfg_.spectral_bounds ? *cfg_.spectral_bounds : estimate_spectral_bounds(H_, 200, cfg_.threads);
    center_ = 0.5 * (bounds_.first + bounds_.second);
    half_width_ = std::max(0.5 * (bounds_.second - bounds_.first), 1e-300);
    norm_H_ = std::max(std::abs(bounds_.first), std::abs(bounds_.second));
  }

  std::pair<double, double> bounds() const { return bounds_; }
  const EvolutionStats& stats() const { return stats_; }
  double norm_bound() const { return norm_H_; }

  // psi <- exp(-i H dt) psi for one step of either sign.
  void step(CVector& psi, double dt) {
    if (dt == 0) return;
    if (cfg_.method == Method::Chebyshev)
      chebyshev_step(psi, dt);
    else
      krylov_step(psi, dt);
    ++stats_.steps;
  }

  // Advances psi by duration in equal steps no longer than time_step.
  void advance(CVector& psi, double duration) {
    if (duration == 0) return;
    const long n = std::max<long>(1, static_cast<long>(std::ceil(std::abs(duration) / cfg_.time_step - 1e-9)));
    const double dt = duration / n;
    for (long i = 0; i < n; ++i) step(psi, dt);
  }

 private:
  const std::vector<cplx>& chebyshev_coefficients(double dt) {
    if (dt == coeff_dt_) return coeffs_;
    coeff_dt_ = dt;
    coeffs_.clear();
    const double x = half_width_ * std::abs(dt);
    const cplx unit = dt > 0 ? cplx(0, -1) : cplx(0, 1);
    cplx phase = 1.0;
    // Tail sum of |J_n(x)| beyond the cut bounds the truncation error since |T_n| <= 1.
    for (int n = 0;; ++n) {
      if (n > cfg_.max_order)
        throw StepRejected("Chebyshev order exceeds " + std::to_string(cfg_.max_order) + " for dt=" + fmt_fixed(dt));
      const double j = std::cyl_bessel_j(double(n), x);
      coeffs_.push_back((n == 0 ? 1.0 : 2.0) * phase * j);
      phase *= unit;
      if (n > x) {
        const double j1 = std::abs(std::cyl_bessel_j(double(n + 1), x));
        const double j2 = std::abs(std::cyl_bessel_j(double(n + 2), x));
        if (2.0 * (j1 + j2) < 1e-4 * cfg_.tolerance) break;
      }
    }
    return coeffs_;
  }

  void chebyshev_step(CVector& psi, double dt) {
    const auto& c = chebyshev_coefficients(dt);
    const std::size_t n = psi.size();
    const double a = half_width_, s = center_;
    CVector acc(n), prev = psi, cur(n);
    H_.apply(psi.data(), cur.data(), cfg_.threads);
    ++stats_.matvecs;
    for (std::size_t i = 0; i < n; ++i) {
      cur[i] = (cur[i] - s * psi[i]) / a;
      acc[i] = c[0] * psi[i] + (c.size() > 1 ? c[1] * cur[i] : 0.0);
    }
    const auto* rp = H_.row_ptr.data();
    const auto* cl = H_.col.data();
    const auto* vl = H_.val.data();
    const double two_a = 2.0 / a;
    for (std::size_t k = 2; k < c.size(); ++k) {
      const cplx ck = c[k];
      cplx* pv = prev.data();
      const cplx* cv = cur.data();
      cplx* ac = acc.data();
      // prev <- 2 H~ cur - prev, then accumulate; rows are independent.
      parallel_for(n, cfg_.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          cplx h = 0;
          for (std::int64_t p = rp[i]; p < rp[i + 1]; ++p) h += vl[p] * cv[cl[p]];
          const cplx w = two_a * (h - s * cv[i]) - pv[i];
          pv[i] = w;
          ac[i] += ck * w;
        }
      });
      std::swap(prev, cur);
      ++stats_.matvecs;
    }
    const cplx g = std::polar(1.0, -s * dt);
    for (std::size_t i = 0; i < n; ++i) psi[i] = g * acc[i];
  }

  void krylov_step(CVector& psi, double dt) {
    const std::size_t n = psi.size();
    const int m_max = std::min<int>(cfg_.krylov_dim, static_cast<int>(n));
    const double beta0 = norm2(psi);
    std::vector<CVector> V;
    V.push_back(psi);
    scale(V[0], 1.0 / beta0);
    std::vector<double> alpha, beta;
    CVector w(n);
    double beta_last = 0;
    int m = 0;
    for (; m < m_max; ++m) {
      H_.apply(V[m], w, cfg_.threads);
      ++stats_.matvecs;
      const double a = dot(V[m], w).real();
      alpha.push_back(a);
      for (std::size_t i = 0; i < n; ++i) w[i] -= a * V[m][i] + (m > 0 ? beta[m - 1] * V[m - 1][i] : 0.0);
      for (const auto& q : V) {
        const cplx c = dot(q, w);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
      }
      beta_last = norm2(w);
      if (beta_last < 1e-14 * (std::abs(a) + 1)) {
        ++m;
        beta_last = 0;
        break;
      }
      if (m + 1 < m_max) {
        beta.push_back(beta_last);
        V.push_back(w);
        scale(V.back(), 1.0 / beta_last);
      }
    }
    const int dim = static_cast<int>(alpha.size());
    Eigen::VectorXd d(dim), e(std::max(dim - 1, 0));
    for (int i = 0; i < dim; ++i) d(i) = alpha[i];
    for (int i = 0; i + 1 < dim; ++i) e(i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
    for (int j = 0; j < dim; ++j)
      y += es.eigenvectors().col(j).cast<cplx>() *
           (std::polar(1.0, -es.eigenvalues()(j) * dt) * es.eigenvectors()(0, j));
    const double err = beta0 * beta_last * std::abs(y(dim - 1));
    if (err > cfg_.tolerance)
      throw StepRejected("Krylov error estimate " + fmt_sci(err) + " exceeds tolerance at dt=" + fmt_fixed(dt));
    std::fill(psi.begin(), psi.end(), cplx(0));
    for (int j = 0; j < dim; ++j) {
      const cplx f = beta0 * y(j);
      for (std::size_t i = 0; i < n; ++i) psi[i] += f * V[j][i];
    }
  }

  const SparseOperator& H_;
  EvolutionConfig cfg_;
  std::pair<double, double> bounds_;
  double center_ = 0, half_width_ = 1, norm_H_ = 0;
  EvolutionStats stats_;
  double coeff_dt_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<cplx> coeffs_;
};

using SnapshotObserver = std::function<void(const StateVector&)>;

// Marches psi through config.snapshot_times (or to total_time) and hands each
// snapshot to the observer. Norm and energy drift are checked at every snapshot.
inline StateVector evolve(StateVector psi, const SparseOperator& H, const EvolutionConfig& cfg,
                          const SnapshotObserver& observer, EvolutionStats* stats_out = nullptr) {
  Propagator prop(H, cfg);
  std::vector<double> times = cfg.snapshot_times;
  if (times.empty()) times.push_back(cfg.total_time);
  std::sort(times.begin(), times.end());
  const double e0 = cfg.check_invariants ? H.expectation(psi.amplitudes) : 0.0;
  const double t0 = psi.time;
  const double eps_floor = 1e-13;
  EvolutionStats stats;
  for (double t : times) {
    if (t < psi.time - 1e-12) continue;
    prop.advance(psi.amplitudes, t - psi.time);
    psi.time = t;
    if (cfg.check_invariants) {
      const long steps = std::max<long>(prop.stats().steps, 1);
      const double drift = std::abs(norm2(psi.amplitudes) - 1.0);
      const double e_drift = std::abs(H.expectation(psi.amplitudes) - e0);
      stats.max_norm_drift = std::max(stats.max_norm_drift, drift);
      stats.max_energy_drift = std::max(stats.max_energy_drift, e_drift);
      if (drift > 10 * cfg.tolerance * steps + eps_floor * steps)
        throw StepRejected("norm drift " + fmt_sci(drift) + " at t=" + fmt_fixed(t));
      if (e_drift > 10 * cfg.tolerance * prop.norm_bound() * std::abs(t - t0) + eps_floor * steps * prop.norm_bound())
        throw StepRejected("energy drift " + fmt_sci(e_drift) + " at t=" + fmt_fixed(t));
    }
    if (observer) observer(psi);
  }
  stats.steps = prop.stats().steps;
  stats.matvecs = prop.stats().matvecs;
  if (stats_out) *stats_out = stats;
  return psi;
}

inline std::vector<StateVector> evolve_snapshots(const StateVector& psi, const SparseOperator& H,
                                                 const EvolutionConfig& cfg) {
  std::vector<StateVector> out;
  evolve(psi, H, cfg, [&](const StateVector& s) { out.push_back(s); });
  return out;
}

// Unobserved propagation by a signed duration.
inline void propagate(CVector& psi, const SparseOperator& H, double duration, const EvolutionConfig& cfg) {
  Propagator prop(H, cfg);
  prop.advance(psi, duration);
}

}  // namespace wqed
