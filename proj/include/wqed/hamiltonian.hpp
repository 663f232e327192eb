#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "format.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace wqed {

// Compressed sparse row storage, columns sorted within each row.
struct SparseOperator {
  std::size_t dimension = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<cplx> val;

  std::size_t nnz() const { return val.size(); }

  void apply(const cplx* x, cplx* y, int threads = 1) const {
    parallel_for(dimension, threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        cplx acc = 0;
        for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += val[p] * x[col[p]];
        y[i] = acc;
      }
    });
  }

  void apply(const CVector& x, CVector& y, int threads = 1) const {
    y.resize(dimension);
    apply(x.data(), y.data(), threads);
  }

  cplx entry(std::size_t i, std::size_t j) const {
    const auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
    if (it == e || *it != static_cast<std::int32_t>(j)) return 0.0;
    return val[it - col.begin()];
  }

  // max |H_ij - conj(H_ji)| over stored entries.
  double hermiticity_error() const {
    double err = 0;
    for (std::size_t i = 0; i < dimension; ++i)
      for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        err = std::max(err, std::abs(val[p] - std::conj(entry(col[p], i))));
    return err;
  }

  std::pair<double, double> gershgorin() const {
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < dimension; ++i) {
      double c = 0, r = 0;
      for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        if (static_cast<std::size_t>(col[p]) == i)
          c = val[p].real();
        else
          r += std::abs(val[p]);
      }
      if (i == 0 || c - r < lo) lo = c - r;
      if (i == 0 || c + r > hi) hi = c + r;
    }
    return {lo, hi};
  }

  double expectation(const CVector& x) const {
    double s = 0;
    for (std::size_t i = 0; i < dimension; ++i) {
      cplx acc = 0;
      for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += val[p] * x[col[p]];
      s += (std::conj(x[i]) * acc).real();
    }
    return s;
  }

  void write_matrix_market(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "%%MatrixMarket matrix coordinate complex general\n";
    out << dimension << ' ' << dimension << ' ' << nnz() << '\n';
    for (std::size_t i = 0; i < dimension; ++i)
      for (std::int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        out << i + 1 << ' ' << col[p] + 1 << ' ' << fmt_fixed(val[p].real()) << ' ' << fmt_fixed(val[p].imag())
            << '\n';
  }
};

// Photon creation at a coupling point with the emitter decaying carries exp(-i phase);
// absorption carries exp(+i phase).
inline cplx emission_amplitude(const CouplingPoint& c) { return std::polar(c.strength, -c.phase); }

namespace detail {

inline Configuration move_photon(const Configuration& c, int slot, int to) {
  Configuration d = c;
  d.sites[slot] = to;
  std::sort(d.sites.begin(), d.sites.begin() + d.n_photons);
  return d;
}

inline Configuration add_photon(const Configuration& c, int site, std::uint32_t pattern) {
  Configuration d = c;
  d.pattern = pattern;
  d.sites[d.n_photons++] = site;
  std::sort(d.sites.begin(), d.sites.begin() + d.n_photons);
  return d;
}

inline Configuration remove_photon(const Configuration& c, int slot, std::uint32_t pattern) {
  Configuration d = c;
  d.pattern = pattern;
  for (int i = slot; i + 1 < d.n_photons; ++i) d.sites[i] = d.sites[i + 1];
  d.sites[--d.n_photons] = 0;
  return d;
}

}  // namespace detail

// Column i of H, i.e. H|i> = sum_j a_j |j>, as (j, a_j) pairs.
inline void hamiltonian_column(const SectorBasis& basis, const Configuration& c,
                               std::vector<std::pair<std::int64_t, cplx>>& out) {
  out.clear();
  const auto& lat = basis.lattice();
  const auto& emitters = basis.emitters();
  const int N = lat.n_sites;
  const double J = lat.hopping, U = lat.nonlinearity;

  double diag = 0;
  for (std::size_t e = 0; e < emitters.size(); ++e)
    diag += (c.excited(static_cast<int>(e)) ? 0.5 : -0.5) * emitters[e].detuning;
  for (int i = 0; i < c.n_photons; ++i) {
    if (i > 0 && c.sites[i] == c.sites[i - 1]) continue;
    const int n = c.occupancy(c.sites[i]);
    diag -= 0.5 * U * n * (n - 1);
  }
  out.emplace_back(basis.index(c), diag);

  for (int i = 0; i < c.n_photons; ++i) {
    if (i > 0 && c.sites[i] == c.sites[i - 1]) continue;
    const int s = c.sites[i];
    const int ns = c.occupancy(s);
    for (int dir = -1; dir <= 1; dir += 2) {
      int t = s + dir;
      if (t < 0 || t >= N) {
        if (lat.boundary != Boundary::Ring || N < 3) continue;
        t = (t + N) % N;
      }
      const int nt = c.occupancy(t);
      const auto j = basis.index(detail::move_photon(c, i, t));
      if (j < 0) continue;
      out.emplace_back(j, -J * std::sqrt(double(ns) * (nt + 1)));
    }
  }

  for (std::size_t e = 0; e < emitters.size(); ++e) {
    const std::uint32_t bit = 1u << e;
    for (const auto& cp : emitters[e].couplings) {
      if (c.pattern & bit) {
        const int n = c.occupancy(cp.site);
        const auto j = basis.index(detail::add_photon(c, cp.site, c.pattern & ~bit));
        if (j >= 0) out.emplace_back(j, emission_amplitude(cp) * std::sqrt(double(n + 1)));
      } else {
        int slot = -1;
        for (int i = 0; i < c.n_photons; ++i)
          if (c.sites[i] == cp.site) slot = i;
        if (slot < 0) continue;
        const int n = c.occupancy(cp.site);
        const auto j = basis.index(detail::remove_photon(c, slot, c.pattern | bit));
        if (j >= 0) out.emplace_back(j, std::conj(emission_amplitude(cp)) * std::sqrt(double(n)));
      }
    }
  }
}

inline SparseOperator assemble_hamiltonian(const SectorBasis& basis) {
  SparseOperator H;
  H.dimension = basis.dimension();
  H.row_ptr.reserve(H.dimension + 1);
  H.col.reserve(H.dimension * 7);
  H.val.reserve(H.dimension * 7);
  std::vector<std::pair<std::int64_t, cplx>> column;
  basis.for_each([&](std::size_t i, const Configuration& c) {
    hamiltonian_column(basis, c, column);
    // Row i is the conjugate of column i.
    std::sort(column.begin(), column.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t k = 0;
    while (k < column.size()) {
      const auto j = column[k].first;
      cplx v = 0;
      for (; k < column.size() && column[k].first == j; ++k) v += column[k].second;
      if (v == cplx(0) && static_cast<std::size_t>(j) != i) continue;
      H.col.push_back(static_cast<std::int32_t>(j));
      H.val.push_back(std::conj(v));
    }
    H.row_ptr.push_back(static_cast<std::int64_t>(H.col.size()));
  });
  return H;
}

}  // namespace wqed
