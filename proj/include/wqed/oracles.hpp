#pragma once

// Reference computations that share no code path with the production solvers.
// Used by the test suites and by `wqed validate`.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "bands.hpp"
#include "hamiltonian.hpp"
#include "linalg.hpp"

namespace wqed::oracle {

struct BoundStateED {
  double energy = 0;
  std::vector<cplx> relative;  // f(d), d = 0..N-1 on the ring, unit norm
  double alpha_fit = 0;
};

// Two bosons on an N-site ring at total momentum K = 2 pi m / N, written as
// psi(n1, n2) = e^{i K n2} f(n1 - n2). Lowest eigenpair of the reduced N x N problem.
inline BoundStateED doublon_ring_ed(int N, int m, double J, double U, int fit_points = 6) {
  const double K = 2.0 * kPi * m / N;
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(N, N);
  const cplx a = -J * (1.0 + std::polar(1.0, -K)), b = -J * (1.0 + std::polar(1.0, K));
  for (int d = 0; d < N; ++d) {
    H(d, (d + 1) % N) += a;
    H(d, (d - 1 + N) % N) += b;
  }
  H(0, 0) -= U;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  BoundStateED out;
  out.energy = es.eigenvalues()(0);
  out.relative.resize(N);
  for (int d = 0; d < N; ++d) out.relative[d] = es.eigenvectors()(d, 0);
  // Least-squares slope of log|f(d)| over d = 0..fit_points.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int d = 0; d <= fit_points; ++d) {
    const double y = std::abs(out.relative[d]);
    if (y < 1e-200) break;
    const double ly = std::log(y);
    sx += d;
    sy += ly;
    sxx += double(d) * d;
    sxy += d * ly;
    ++n;
  }
  out.alpha_fit = n >= 2 ? std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx)) : 0.0;
  return out;
}

// Bosonic two-photon amplitudes c({n1 <= n2}) of the ED bound state, normalised.
inline std::vector<cplx> doublon_ring_state(const BoundStateED& ed, int N, int m) {
  const double K = 2.0 * kPi * m / N;
  std::vector<cplx> c;
  for (int n1 = 0; n1 < N; ++n1)
    for (int n2 = n1; n2 < N; ++n2) {
      const cplx psi = std::polar(1.0 / std::sqrt(double(N)), K * n2) * ed.relative[(n1 - n2 + N) % N];
      c.push_back(n1 == n2 ? psi : std::sqrt(2.0) * psi);
    }
  const double nrm = norm2(c);
  for (auto& v : c) v /= nrm;
  return c;
}

inline Eigen::MatrixXcd to_dense(const SparseOperator& H) {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(H.dimension, H.dimension);
  for (std::size_t i = 0; i < H.dimension; ++i)
    for (auto p = H.row_ptr[i]; p < H.row_ptr[i + 1]; ++p) D(i, H.col[p]) += H.val[p];
  return D;
}

// exp(-i H t) psi by dense diagonalisation.
inline CVector dense_expm(const SparseOperator& H, const CVector& psi, double t) {
  const Eigen::MatrixXcd D = to_dense(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
  Eigen::VectorXcd x(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) x(i) = psi[i];
  Eigen::VectorXcd y = es.eigenvectors().adjoint() * x;
  for (int i = 0; i < y.size(); ++i) y(i) *= std::polar(1.0, -es.eigenvalues()(i) * t);
  x = es.eigenvectors() * y;
  return CVector(x.data(), x.data() + x.size());
}

inline Eigen::VectorXd dense_spectrum(const SparseOperator& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense(H), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Single photon on an N-ring evolved exactly in the momentum basis.
inline CVector free_photon_ring(const CVector& psi, double J, double t) {
  const int N = static_cast<int>(psi.size());
  CVector out(N, 0.0);
  for (int m = 0; m < N; ++m) {
    const double k = 2.0 * kPi * m / N;
    cplx ck = 0;
    for (int n = 0; n < N; ++n) ck += psi[n] * std::polar(1.0, -k * n);
    ck *= std::polar(1.0 / N, 2.0 * J * std::cos(k) * t);
    for (int n = 0; n < N; ++n) out[n] += ck * std::polar(1.0, k * n);
  }
  return out;
}

// Second-order strong-coupling estimate of the three-boson bound state: -3U - 3J^2/U.
inline double triplon_strong_coupling(double J, double U) { return -3.0 * U - 3.0 * J * J / U; }

}  // namespace wqed::oracle
