#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace wqed {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline double norm2(const CVector& x) {
  double s = 0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

// <x, y> with x conjugated; serial left-to-right summation.
inline cplx dot(const CVector& x, const CVector& y) {
  cplx s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline void scale(CVector& x, cplx a) {
  for (auto& v : x) v *= a;
}

inline double fidelity(const CVector& a, const CVector& b) { return std::norm(dot(a, b)); }

struct LanczosResult {
  double lowest = 0;
  double highest = 0;
  double lowest_residual = 0;
  double highest_residual = 0;
  int iterations = 0;
  bool converged = false;
};

// Extreme Ritz values of a Hermitian operator. apply(x, y) must write y = A x.
// With full_reorth all Krylov vectors are kept; otherwise only three are.
template <class Apply>
LanczosResult lanczos_extremes(Apply&& apply, CVector start, int max_iter, double tol,
                               bool full_reorth, bool lowest_only = false) {
  const std::size_t n = start.size();
  LanczosResult out;
  const double nrm = norm2(start);
  scale(start, 1.0 / nrm);
  std::vector<CVector> basis;
  if (full_reorth) basis.push_back(start);
  CVector v = start, v_prev(n, 0.0), w(n);
  std::vector<double> alpha, beta;
  for (int j = 0; j < max_iter; ++j) {
    apply(v, w);
    const double a = dot(v, w).real();
    alpha.push_back(a);
    const double b_prev = beta.empty() ? 0.0 : beta.back();
    for (std::size_t i = 0; i < n; ++i) w[i] -= a * v[i] + b_prev * v_prev[i];
    if (full_reorth) {
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) {
          const cplx c = dot(q, w);
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
        }
    }
    const double b = norm2(w);
    const int m = static_cast<int>(alpha.size());
    const bool exhausted = b < 1e-13 * (std::abs(a) + 1.0) || static_cast<std::size_t>(m) >= n;
    if (m % 4 == 0 || exhausted || j + 1 == max_iter) {
      Eigen::VectorXd d(m), e(std::max(m - 1, 0));
      for (int i = 0; i < m; ++i) d(i) = alpha[i];
      for (int i = 0; i + 1 < m; ++i) e(i) = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
      out.lowest = es.eigenvalues()(0);
      out.highest = es.eigenvalues()(m - 1);
      out.lowest_residual = exhausted ? 0.0 : b * std::abs(es.eigenvectors()(m - 1, 0));
      out.highest_residual = exhausted ? 0.0 : b * std::abs(es.eigenvectors()(m - 1, m - 1));
      out.iterations = m;
      const double scale_ref = std::max({1.0, std::abs(out.lowest), std::abs(out.highest)});
      const bool low_ok = out.lowest_residual < tol * scale_ref;
      const bool high_ok = lowest_only || out.highest_residual < tol * scale_ref;
      if (exhausted || (low_ok && high_ok)) {
        out.converged = true;
        return out;
      }
    }
    beta.push_back(b);
    v_prev = v;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / b;
    if (full_reorth) basis.push_back(v);
  }
  return out;
}

}  // namespace wqed
