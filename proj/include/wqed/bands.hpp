#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "lattice.hpp"
#include "linalg.hpp"

namespace wqed {

inline constexpr double kPi = std::numbers::pi;

inline double single_photon_energy(double k, const LatticeSpec& lat) {
  return -2.0 * lat.hopping * std::cos(k);
}

inline double single_photon_velocity(double k, const LatticeSpec& lat) {
  return 2.0 * lat.hopping * std::sin(k);
}

inline double doublon_energy(double K, const LatticeSpec& lat) {
  const double c = 4.0 * lat.hopping * std::cos(K / 2);
  return -std::sqrt(lat.nonlinearity * lat.nonlinearity + c * c);
}

inline double doublon_velocity(double K, const LatticeSpec& lat) {
  const double J = lat.hopping, U = lat.nonlinearity, c = std::cos(K / 2);
  return 4.0 * J * J * std::sin(K) / std::sqrt(U * U + 16.0 * J * J * c * c);
}

struct DoublonShape {
  double momentum = 0;
  double decay_factor = 0;         // alpha
  double localization_length = 0; // L_u = -1/ln(alpha)
  double normalization = 1;        // u0
  bool degenerate = false;         // alpha -> 0 at |K| = pi

  // Relative-coordinate amplitude u(r) = u0 * alpha^|r|.
  double amplitude(int r) const {
    if (degenerate) return r == 0 ? 1.0 : 0.0;
    return normalization * std::pow(decay_factor, std::abs(r));
  }
};

inline DoublonShape doublon_shape(double K, const LatticeSpec& lat) {
  if (!(lat.nonlinearity > 0)) throw InvalidSpec("doublon shape needs U > 0");
  DoublonShape s;
  s.momentum = K;
  const double jk = 2.0 * lat.hopping * std::cos(K / 2);
  if (std::abs(std::cos(K / 2)) < 1e-12) {
    s.degenerate = true;
    return s;
  }
  const double U = lat.nonlinearity;
  // Root of jk a^2 + U a - jk = 0 in (0, 1), written without cancellation.
  const double a = 2.0 * std::abs(jk) / (U + std::sqrt(U * U + 4.0 * jk * jk));
  s.decay_factor = a;
  s.localization_length = -1.0 / std::log(a);
  s.normalization = std::sqrt((1.0 - a * a) / (1.0 + a * a));
  return s;
}

inline void require_in_band(double K) {
  if (!(K >= -kPi - 1e-12 && K <= kPi + 1e-12)) throw InvalidSpec("momentum outside [-pi, pi]");
}

// K_r in [0, pi] with E_K(K_r) = detuning + E_k(k0).
inline double resonant_doublon_momentum(double detuning, double k0, const LatticeSpec& lat) {
  const double target = detuning + single_photon_energy(k0, lat);
  const double lo_e = doublon_energy(0.0, lat), hi_e = doublon_energy(kPi, lat);
  const double slack = 1e-12 * std::max(1.0, std::abs(target));
  if (target < lo_e - slack || target > hi_e + slack)
    throw OffResonant("target energy " + fmt_fixed(target) + " outside doublon band [" +
                      fmt_fixed(lo_e) + ", " + fmt_fixed(hi_e) + "]");
  if (target <= lo_e) return 0.0;
  if (target >= hi_e) return kPi;
  double a = 0.0, b = kPi;
  for (int i = 0; i < 200 && b - a > 1e-16; ++i) {
    const double m = 0.5 * (a + b);
    (doublon_energy(m, lat) < target ? a : b) = m;
  }
  return 0.5 * (a + b);
}

// Fritsch-Carlson monotone cubic Hermite interpolant on increasing nodes.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InvalidSpec("interpolant needs at least two nodes");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
      m_[i] = delta[i - 1] * delta[i] <= 0 ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0) {
        m_[i] = m_[i + 1] = 0;
        continue;
      }
      const double a = m_[i] / delta[i], b = m_[i + 1] / delta[i];
      const double h = a * a + b * b;
      if (h > 9) {
        const double t = 3 / std::sqrt(h);
        m_[i] = t * a * delta[i];
        m_[i + 1] = t * b * delta[i];
      }
    }
  }

  double operator()(double x) const { return eval(x, false); }
  double derivative(double x) const { return eval(x, true); }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  double eval(double x, bool deriv) const {
    std::size_t i = 0;
    while (i + 2 < x_.size() && x > x_[i + 1]) ++i;
    const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    if (!deriv)
      return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
             (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
    return ((6 * t2 - 6 * t) * y_[i] + (3 * t2 - 4 * t + 1) * h * m_[i] +
            (-6 * t2 + 6 * t) * y_[i + 1] + (3 * t2 - 2 * t) * h * m_[i + 1]) / h;
  }

  std::vector<double> x_, y_, m_;
};

struct TriplonTable {
  std::vector<double> momentum;
  std::vector<double> energy;
  std::vector<double> group_velocity;
  int max_spread = 12;
};

// Lowest eigenvalue of three bosons at total momentum Kt. Coordinates are
// d1 = n1 - n3, d2 = n2 - n3 restricted to pairwise spread <= max_spread.
inline double triplon_energy(double Kt, const LatticeSpec& lat, int max_spread) {
  const int R = max_spread, w = 2 * R + 1;
  std::vector<int> index(static_cast<std::size_t>(w * w), -1);
  std::vector<std::pair<int, int>> coords;
  for (int d1 = -R; d1 <= R; ++d1)
    for (int d2 = -R; d2 <= R; ++d2)
      if (std::abs(d1 - d2) <= R) {
        index[(d1 + R) * w + (d2 + R)] = static_cast<int>(coords.size());
        coords.emplace_back(d1, d2);
      }
  auto idx = [&](int d1, int d2) {
    if (std::abs(d1) > R || std::abs(d2) > R || std::abs(d1 - d2) > R) return -1;
    return index[(d1 + R) * w + (d2 + R)];
  };
  const double J = lat.hopping, U = lat.nonlinearity;
  const cplx ep = std::polar(1.0, Kt), em = std::conj(ep);
  auto apply = [&](const CVector& x, CVector& y) {
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto [d1, d2] = coords[i];
      const int pairs = (d1 == d2) + (d1 == 0) + (d2 == 0);
      cplx acc = -U * pairs * x[i];
      auto add = [&](int a, int b, cplx f) {
        const int j = idx(a, b);
        if (j >= 0) acc += f * x[j];
      };
      add(d1 + 1, d2, -J);
      add(d1 - 1, d2, -J);
      add(d1, d2 + 1, -J);
      add(d1, d2 - 1, -J);
      add(d1 - 1, d2 - 1, -J * ep);
      add(d1 + 1, d2 + 1, -J * em);
      y[i] = acc;
    }
  };
  CVector start(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto [d1, d2] = coords[i];
    const int spread = std::max({std::abs(d1), std::abs(d2), std::abs(d1 - d2)});
    start[i] = std::exp(-1.5 * spread) * (1.0 + 0.01 * std::sin(1.0 + i));
  }
  const auto res = lanczos_extremes(apply, start, static_cast<int>(std::min<std::size_t>(coords.size(), 400)),
                                    1e-12, true, true);
  if (!res.converged) throw NoConvergence("triplon Lanczos did not converge");
  return res.lowest;
}

struct BandModel {
  LatticeSpec lattice;
  std::optional<TriplonTable> triplon_table;
  MonotoneCubic triplon_half;  // E over [0, pi]

  double triplon_energy_at(double Kt) const { return triplon_half(std::abs(Kt)); }
  double triplon_velocity_at(double Kt) const {
    const double v = triplon_half.derivative(std::abs(Kt));
    return Kt < 0 ? -v : v;
  }
};

inline std::vector<double> uniform_grid(int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = -kPi + 2.0 * kPi * i / (points - 1);
  return g;
}

inline BandModel triplon_band(const LatticeSpec& lat, const std::vector<double>& grid, int max_spread = 12) {
  if (grid.size() < 3 || grid.front() > -kPi + 1e-12 || grid.back() < kPi - 1e-12)
    throw InvalidSpec("triplon grid must cover [-pi, pi]");
  TriplonTable t;
  t.max_spread = max_spread;
  t.momentum = grid;
  for (double Kt : grid) {
    const double e = triplon_energy(Kt, lat, max_spread);
    const double e2 = triplon_energy(Kt, lat, 2 * max_spread);
    if (std::abs(e - e2) > 1e-8 * lat.hopping)
      throw TruncationNotConverged("triplon energy at K=" + fmt_fixed(Kt) + " shifts by " +
                                   fmt_sci(std::abs(e - e2)) + " when doubling the spread cutoff");
    t.energy.push_back(e);
  }
  const std::size_t n = grid.size();
  t.group_velocity.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = grid[i] - grid[i - 1], h1 = grid[i + 1] - grid[i];
    t.group_velocity[i] = (h0 * h0 * (t.energy[i + 1] - t.energy[i]) + h1 * h1 * (t.energy[i] - t.energy[i - 1])) /
                          (h0 * h1 * (h0 + h1));
  }
  // Band edges at +-pi are extrema by parity.
  BandModel b{lat, t, {}};
  std::vector<double> hx, hy;
  for (std::size_t i = 0; i < n; ++i)
    if (grid[i] >= -1e-15) {
      hx.push_back(std::max(0.0, grid[i]));
      hy.push_back(t.energy[i]);
    }
  if (hx.size() < 2 || hx.front() > 1e-12) throw InvalidSpec("triplon grid must include K = 0");
  b.triplon_half = MonotoneCubic(hx, hy);
  return b;
}

inline double resonant_triplon_momentum(double detuning2, double K_r, const BandModel& band) {
  if (!band.triplon_table) throw InvalidSpec("band model has no triplon table");
  const double target = detuning2 + doublon_energy(K_r, band.lattice);
  const auto& f = band.triplon_half;
  const double lo = f(f.front()), hi = f(f.back());
  if (target < lo || target > hi)
    throw OffResonant("target energy " + fmt_fixed(target) + " outside triplon band [" + fmt_fixed(lo) +
                      ", " + fmt_fixed(hi) + "]");
  double a = f.front(), b = f.back();
  for (int i = 0; i < 200 && b - a > 1e-16; ++i) {
    const double m = 0.5 * (a + b);
    (f(m) < target ? a : b) = m;
  }
  return 0.5 * (a + b);
}

struct BandRow {
  double momentum, energy, group_velocity;
};

inline void write_band_csv(const std::string& path, const std::vector<BandRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "momentum,energy,group_velocity\n";
  for (const auto& r : rows)
    out << fmt_fixed(r.momentum) << ',' << fmt_fixed(r.energy) << ',' << fmt_fixed(r.group_velocity) << '\n';
}

inline std::vector<BandRow> single_photon_table(const LatticeSpec& lat, const std::vector<double>& grid) {
  std::vector<BandRow> rows;
  for (double k : grid) rows.push_back({k, single_photon_energy(k, lat), single_photon_velocity(k, lat)});
  return rows;
}

inline std::vector<BandRow> doublon_table(const LatticeSpec& lat, const std::vector<double>& grid) {
  std::vector<BandRow> rows;
  for (double K : grid) rows.push_back({K, doublon_energy(K, lat), doublon_velocity(K, lat)});
  return rows;
}

inline std::vector<BandRow> triplon_rows(const TriplonTable& t) {
  std::vector<BandRow> rows;
  for (std::size_t i = 0; i < t.momentum.size(); ++i) rows.push_back({t.momentum[i], t.energy[i], t.group_velocity[i]});
  return rows;
}

}  // namespace wqed
