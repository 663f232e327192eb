#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bands.hpp"
#include "basis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "hamiltonian.hpp"
#include "lattice.hpp"
#include "observables.hpp"
#include "pga.hpp"
#include "propagator.hpp"
#include "snapshots.hpp"
#include "wavepacket.hpp"

namespace wqed {

// Emitter as written in a config section; strengths and phases scale with g and phi.
struct EmitterParams {
  std::string name;
  int site = 0;
  double detuning = 0;
  double g = 0;
  double phi = 0;
  std::vector<int> offsets{0};
  std::vector<double> phase_pattern{0};
  std::vector<double> strength_pattern;

  EmitterSpec build() const { return giant_atom(site, g, phi, detuning, offsets, phase_pattern, strength_pattern); }
  EmitterSpec with(double g_new, double phi_new) const {
    EmitterParams p = *this;
    p.g = g_new;
    p.phi = phi_new;
    return p.build();
  }
};

struct AnalysisSettings {
  int cutoff = 3;  // PGA kernel range, S_PGA = 2 cutoff + 1 per coupling point
  PopulationCutoffs populations;
  int max_spread = 8;           // three-photon truncation
  int convergence_spread = 12;  // 0 skips the truncation check
  double convergence_tolerance = 1e-3;
  int triplon_grid = 33;
  int detector_offset = 10;  // sites beyond the last emitter
  int profile_spread = 6;
};

struct SweepSettings {
  double g_min = 0.1, g_max = 0.5;
  int g_points = 5;
  double phi_min = 0, phi_max = 0;
  int phi_points = 1;
  double g_resolution = 1e-3;
  double phi_resolution = 1e-3 * kPi;
  std::optional<double> verify_g, verify_phi;

  std::vector<double> g_values() const { return linspace(g_min, g_max, g_points); }
  std::vector<double> phi_values() const { return linspace(phi_min, phi_max, phi_points); }

  static std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
  }
};

struct ScenarioConfig {
  std::string id;
  LatticeSpec lattice;
  std::vector<EmitterParams> emitters;
  WavepacketSpec packet;
  EvolutionConfig evolution;
  double snapshot_every = 0;  // 0: final state only
  AnalysisSettings analysis;
  SweepSettings sweep;
  std::string sweep_mode = "analytic";
  int band_points = 65;
  std::string output = "out";

  std::vector<EmitterSpec> built_emitters() const {
    std::vector<EmitterSpec> out;
    for (const auto& e : emitters) out.push_back(e.build());
    return out;
  }
  std::vector<int> emitter_sites() const {
    std::vector<int> s;
    for (const auto& e : built_emitters())
      for (const auto& c : e.couplings) s.push_back(c.site);
    return s;
  }

  void validate() const {
    lattice.validate();
    for (const auto& e : built_emitters()) e.validate(lattice);
    evolution.validate();
    if (emitters.size() == 2) {
      const double sep = std::abs(emitters[1].site - emitters[0].site);
      const double w = spatial_width(packet);
      if (std::isfinite(w) && sep < 5 * w)
        throw InvalidSpec("emitter separation " + fmt_fixed(sep) + " is below five packet widths (" +
                          fmt_fixed(5 * w) + ")");
    }
  }
};

inline std::vector<int> to_ints(const std::vector<double>& v, const std::string& key) {
  std::vector<int> out;
  for (double x : v) {
    if (x != std::floor(x)) throw ConfigError(key + ": expected integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

inline ScenarioConfig load_scenario(Config& cfg) {
  ScenarioConfig s;
  s.id = cfg.get_string("scenario", "custom");
  s.lattice.n_sites = cfg.get_int("lattice.sites");
  s.lattice.hopping = cfg.get_double("lattice.hopping", 1.0);
  s.lattice.nonlinearity = cfg.get_double("lattice.nonlinearity", 6.0);
  const std::string bc = cfg.get_string("lattice.boundary", "open");
  if (bc == "open")
    s.lattice.boundary = Boundary::Open;
  else if (bc == "ring")
    s.lattice.boundary = Boundary::Ring;
  else
    throw ConfigError("lattice.boundary must be open or ring");

  for (const auto& name : cfg.get_names("emitters", "emitter")) {
    EmitterParams e;
    e.name = name;
    e.site = cfg.get_int(name + ".site");
    e.detuning = cfg.get_double(name + ".detuning");
    e.g = cfg.get_double(name + ".g");
    e.phi = cfg.get_double(name + ".phi", 0.0);
    e.offsets = to_ints(cfg.get_list(name + ".offsets", {0.0}), name + ".offsets");
    e.phase_pattern = cfg.get_list(name + ".phase_pattern", std::vector<double>(e.offsets.size(), 0.0));
    e.strength_pattern = cfg.get_list(name + ".strength_pattern", std::vector<double>(e.offsets.size(), 1.0));
    if (e.phase_pattern.size() != e.offsets.size() || e.strength_pattern.size() != e.offsets.size())
      throw ConfigError(name + ": offsets, phase_pattern and strength_pattern differ in length");
    s.emitters.push_back(e);
  }
  if (s.emitters.empty() || s.emitters.size() > 2) throw ConfigError("one or two emitters are supported");

  const std::string kind = cfg.get_string("packet.kind", "gaussian");
  if (kind == "gaussian")
    s.packet.kind = PacketKind::Gaussian;
  else if (kind == "lorentzian")
    s.packet.kind = PacketKind::Lorentzian;
  else if (kind == "plane")
    s.packet.kind = PacketKind::PlaneWave;
  else
    throw ConfigError("packet.kind must be gaussian, lorentzian or plane");
  s.packet.center_momentum = cfg.get_double("packet.k0", kPi / 2);
  s.packet.width = cfg.get_double("packet.width", 0.0125);
  s.packet.center_position = cfg.get_double("packet.x0", 0.0);

  auto& ev = s.evolution;
  ev.time_step = cfg.get_double("evolution.time_step", 5.0);
  ev.total_time = cfg.get_double("evolution.total_time", 0.0);
  const std::string method = cfg.get_string("evolution.method", "chebyshev");
  if (method == "chebyshev")
    ev.method = Method::Chebyshev;
  else if (method == "krylov")
    ev.method = Method::Krylov;
  else
    throw ConfigError("evolution.method must be chebyshev or krylov");
  ev.tolerance = cfg.get_double("evolution.tolerance", 1e-10);
  ev.krylov_dim = cfg.get_int("evolution.krylov_dim", 30);
  s.snapshot_every = cfg.get_double("evolution.snapshot_every", 0.0);
  if (s.snapshot_every > 0)
    for (int i = 1; i * s.snapshot_every < ev.total_time + 1e-9; ++i) ev.snapshot_times.push_back(i * s.snapshot_every);

  auto& an = s.analysis;
  an.cutoff = cfg.get_int("analysis.cutoff", 3);
  an.populations.doublon_spread = cfg.get_int("analysis.doublon_spread", 2);
  an.populations.triplon_spread = cfg.get_int("analysis.triplon_spread", 2);
  an.populations.overlap_threshold = cfg.get_double("analysis.overlap_threshold", 1e-3);
  an.max_spread = cfg.get_int("analysis.max_spread", 8);
  an.convergence_spread = cfg.get_int("analysis.convergence_spread", 12);
  an.convergence_tolerance = cfg.get_double("analysis.convergence_tolerance", 1e-3);
  an.triplon_grid = cfg.get_int("analysis.triplon_grid", 33);
  an.detector_offset = cfg.get_int("analysis.detector_offset", 10);
  an.profile_spread = cfg.get_int("analysis.profile_spread", 6);

  auto& sw = s.sweep;
  s.sweep_mode = cfg.get_string("sweep.mode", "analytic");
  sw.g_min = cfg.get_double("sweep.g_min", 0.1);
  sw.g_max = cfg.get_double("sweep.g_max", 0.5);
  sw.g_points = cfg.get_int("sweep.g_points", 5);
  sw.phi_min = cfg.get_double("sweep.phi_min", 0.0);
  sw.phi_max = cfg.get_double("sweep.phi_max", 0.0);
  sw.phi_points = cfg.get_int("sweep.phi_points", 1);
  sw.g_resolution = cfg.get_double("sweep.g_resolution", 1e-3);
  sw.phi_resolution = cfg.get_double("sweep.phi_resolution", 1e-3 * kPi);
  if (cfg.has("sweep.verify_g")) sw.verify_g = cfg.get_double("sweep.verify_g");
  if (cfg.has("sweep.verify_phi")) sw.verify_phi = cfg.get_double("sweep.verify_phi");
  if (sw.g_points < 1 || sw.phi_points < 1) throw ConfigError("sweep grids need at least one point");

  s.band_points = cfg.get_int("bands.points", 65);
  s.output = cfg.get_string("output", "out");
  return s;
}

// ---------------------------------------------------------------------------
// Numeric scattering of one packet

struct NumericRun {
  PopulationReport final;
  std::vector<double> times;
  std::vector<PopulationReport> series;
  EvolutionStats stats;
  StateVector state;
};

using StateObserver = std::function<void(const SectorBasis&, const StateVector&)>;

// Optional snapshot persistence. With resume set, stored snapshots are replayed
// through the observers and evolution continues from the last one.
struct SnapshotOptions {
  std::string directory;
  bool resume = false;
  std::map<std::string, std::string> config;
};

inline NumericRun run_numeric(const LatticeSpec& lat, const std::vector<EmitterSpec>& emitters,
                              const WavepacketSpec& packet, EvolutionConfig evo, const PopulationCutoffs& cut,
                              TruncationRule trunc = {}, const StateObserver& extra = nullptr,
                              bool check_overlap = true, const SnapshotOptions* snaps = nullptr) {
  const int total = 1 + static_cast<int>(emitters.size());
  std::vector<int> sites;
  for (const auto& e : emitters)
    for (const auto& c : e.couplings) sites.push_back(c.site);
  SectorBasis basis(lat, emitters, total, trunc);
  const SparseOperator H = assemble_hamiltonian(basis);
  const StateVector psi0 = initial_state(basis, build_wavepacket(packet, lat, sites));
  const RegionGeometry geo = RegionGeometry::of(emitters.back());
  if (evo.snapshot_times.empty() || evo.snapshot_times.back() < evo.total_time - 1e-9)
    evo.snapshot_times.push_back(evo.total_time);
  NumericRun run;
  auto observe = [&](const StateVector& s) {
    run.times.push_back(s.time);
    run.series.push_back(populations(basis, s, geo, cut));
    if (extra) extra(basis, s);
  };
  std::optional<SnapshotStore> store;
  StateVector start = psi0;
  if (snaps && !snaps->directory.empty()) {
    if (!snaps->resume && std::filesystem::exists(std::filesystem::path(snaps->directory) / "snapshots.json"))
      std::filesystem::remove_all(snaps->directory);
    store.emplace(snaps->directory, basis, snaps->config);
    for (std::size_t i = 0; i < store->size(); ++i) {
      start = store->read(i);
      observe(start);
    }
  }
  run.state = evolve(
      start, H, evo,
      [&](const StateVector& s) {
        if (s.time <= start.time && store && store->size() > 0) return;
        observe(s);
        if (store) store->write(s);
      },
      &run.stats);
  run.final = populations(basis, run.state, geo, cut, check_overlap && emitters.size() == 1);
  return run;
}

// ---------------------------------------------------------------------------
// Single-emitter g sweep: numerics against the PGA and pointlike solvers

struct ChannelSet {
  double t2 = 0, r2 = 0, up2 = 0, um2 = 0, emitter = 0;

  static ChannelSet of(const ScatteringAmplitudes& a) { return {a.t2(), a.r2(), a.up2(), a.um2(), a.emitter_proxy()}; }
  static ChannelSet of(const PopulationReport& p) {
    return {p.t2, p.r2, p.u_plus2, p.u_minus2, p.emitter_excited.empty() ? 0.0 : p.emitter_excited[0]};
  }
  double max_deviation(const ChannelSet& o) const {
    return std::max({std::abs(t2 - o.t2), std::abs(r2 - o.r2), std::abs(up2 - o.up2), std::abs(um2 - o.um2)});
  }
};

struct SweepComparisonRow {
  double g = 0, phi = 0;
  ChannelSet numeric, pga, pointlike;
  double residue = 0;  // 1 - (t2 + r2 + u+ + u-): uncorrelated pairs and weight left near the emitter
  double norm_drift = 0;
  double flux_pga = 0, flux_pointlike = 0;
};

struct SweepComparison {
  std::vector<SweepComparisonRow> rows;
  double max_dev_pga = 0;
  double max_dev_pointlike = 0;
  double max_asymmetry = 0;  // max over g of numeric |u+|^2 - |u-|^2
};

inline SweepComparisonRow compare_point(const ScenarioConfig& sc, double g, double phi) {
  const EmitterSpec em = sc.emitters.front().with(g, phi);
  SweepComparisonRow row;
  row.g = g;
  row.phi = phi;
  const double k0 = sc.packet.center_momentum;
  const auto pga = solve_real_space(build_kernel(em, k0, sc.lattice, sc.analysis.cutoff));
  const auto point = solve_real_space(build_kernel(em, k0, sc.lattice, 0));
  row.pga = ChannelSet::of(pga);
  row.pointlike = ChannelSet::of(point);
  row.flux_pga = pga.flux_residual;
  row.flux_pointlike = point.flux_residual;
  const auto run = run_numeric(sc.lattice, {em}, sc.packet, sc.evolution, sc.analysis.populations);
  row.numeric = ChannelSet::of(run.final);
  row.residue = 1.0 - (row.numeric.t2 + row.numeric.r2 + row.numeric.up2 + row.numeric.um2);
  row.norm_drift = run.stats.max_norm_drift;
  return row;
}

inline SweepComparison run_single_emitter_sweep(const ScenarioConfig& sc) {
  SweepComparison out;
  const double phi = sc.emitters.front().phi;
  for (double g : sc.sweep.g_values()) {
    auto row = compare_point(sc, g, phi);
    out.max_dev_pga = std::max(out.max_dev_pga, row.numeric.max_deviation(row.pga));
    out.max_dev_pointlike = std::max(out.max_dev_pointlike, row.numeric.max_deviation(row.pointlike));
    out.max_asymmetry = std::max(out.max_asymmetry, row.numeric.up2 - row.numeric.um2);
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Space-time maps and lobe kinematics

struct LobeTrack {
  std::vector<double> times, centers, widths, weights;

  // Least-squares slope of the centre over samples with weight above threshold.
  std::optional<double> velocity(double min_weight, double t_from = -1e300) const {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (weights[i] < min_weight || times[i] < t_from) continue;
      n += 1;
      sx += times[i];
      sy += centers[i];
      sxx += times[i] * times[i];
      sxy += times[i] * centers[i];
    }
    if (n < 3) return std::nullopt;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
};

struct EvolutionMap {
  std::vector<double> times;
  std::vector<std::vector<double>> photon_number;  // [time][site]
  std::vector<PopulationReport> series;
  LobeTrack transmitted, doublon_forward;
  double v_photon_predicted = 0, v_doublon_predicted = 0;
  std::optional<double> v_photon_measured, v_doublon_measured;
  bool has_doublon_channel = false;
  StateVector final_state;
  PopulationReport final;
  EvolutionStats stats;
};

inline EvolutionMap run_evolution_map(const ScenarioConfig& sc, const StateObserver& extra = nullptr,
                                      const SnapshotOptions* snaps = nullptr) {
  EvolutionMap map;
  const auto emitters = sc.built_emitters();
  const RegionGeometry geo = RegionGeometry::of(emitters.back());
  const int ds = sc.analysis.populations.doublon_spread;
  const double clear = 3.0;  // lobe must sit this many stddevs beyond the divider
  auto track = [&](LobeTrack& tr, const LobeMoments& m, double t) {
    tr.times.push_back(t);
    tr.centers.push_back(m.mean);
    tr.widths.push_back(m.stddev);
    // Lobes still attached to the emitter region are left out of the fit.
    tr.weights.push_back(m.mean - clear * m.stddev > geo.hi ? m.weight : 0.0);
  };
  const auto run = run_numeric(
      sc.lattice, emitters, sc.packet, sc.evolution, sc.analysis.populations,
      TruncationRule{sc.analysis.max_spread},
      [&](const SectorBasis& basis, const StateVector& s) {
        map.times.push_back(s.time);
        map.photon_number.push_back(photon_number_map(basis, s));
        track(map.transmitted, lobe_moments(basis, s, 1, 0, Side::Right, geo), s.time);
        track(map.doublon_forward, lobe_moments(basis, s, 2, ds, Side::Right, geo), s.time);
        if (extra) extra(basis, s);
      },
      false, snaps);
  map.stats = run.stats;
  map.series = run.series;
  map.final = run.final;
  map.final_state = run.state;
  map.v_photon_predicted = single_photon_velocity(sc.packet.center_momentum, sc.lattice);
  map.v_photon_measured = map.transmitted.velocity(1e-3);
  if (sc.lattice.nonlinearity > 0) {
    try {
      const double K = resonant_doublon_momentum(emitters.back().detuning, sc.packet.center_momentum, sc.lattice);
      map.v_doublon_predicted = doublon_velocity(K, sc.lattice);
      map.has_doublon_channel = true;
      map.v_doublon_measured = map.doublon_forward.velocity(1e-3);
    } catch (const OffResonant&) {
    }
  }
  return map;
}

// Per-component spatial profiles and Gaussian envelope fits of the forward lobes.
struct ProfileFit {
  double weight = 0, center = 0, width = 0;
  double predicted_center = 0, predicted_width = 0;
};

struct SnapshotProfiles {
  std::vector<double> single;                  // |psi_I(x)|^2 summed over emitter patterns
  std::vector<std::vector<double>> doublon;    // [r][2 x_c] for r <= profile_spread
  std::vector<double> relative;                // weight per relative distance r
  ProfileFit photon, doublon_fit;
  double decay_fit = 0;                        // alpha from the relative profile
  double decay_predicted = 0;
};

inline SnapshotProfiles snapshot_profiles(const SectorBasis& basis, const StateVector& s, const ScenarioConfig& sc) {
  SnapshotProfiles p;
  const int N = basis.lattice().n_sites;
  const int R = sc.analysis.profile_spread;
  p.single.assign(N, 0.0);
  p.doublon.assign(R + 1, std::vector<double>(2 * N, 0.0));
  p.relative.assign(R + 1, 0.0);
  basis.for_each([&](std::size_t i, const Configuration& c) {
    const double w = std::norm(s.amplitudes[i]);
    if (c.n_photons == 1) p.single[c.sites[0]] += w;
    if (c.n_photons == 2) {
      const int r = c.sites[1] - c.sites[0];
      if (r <= R) {
        p.doublon[r][c.sites[0] + c.sites[1]] += w;
        p.relative[r] += w;
      }
    }
  });
  const auto emitters = basis.emitters();
  const RegionGeometry geo = RegionGeometry::of(emitters.back());
  const auto& lat = basis.lattice();
  const double k0 = sc.packet.center_momentum, x0 = sc.packet.center_position;
  const double vk = single_photon_velocity(k0, lat);
  const double ws = spatial_width(sc.packet);
  const auto m1 = lobe_moments(basis, s, 1, 0, Side::Right, geo);
  p.photon = {m1.weight, m1.mean, m1.stddev, x0 + vk * s.time, ws};
  if (lat.nonlinearity > 0) {
    const auto m2 = lobe_moments(basis, s, 2, sc.analysis.populations.doublon_spread, Side::Right, geo);
    const double e = 0.5 * (geo.lo + geo.hi);
    try {
      const double K = resonant_doublon_momentum(emitters.back().detuning, k0, lat);
      const double vK = doublon_velocity(K, lat);
      const double t_hit = (e - x0) / vk;
      p.doublon_fit = {m2.weight, m2.mean, m2.stddev, e + vK * (s.time - t_hit), ws * vK / vk};
      p.decay_predicted = doublon_shape(K, lat).decay_factor;
      // P(1) / P(0) = 2 alpha^2 with the bosonic sqrt(2) for r > 0.
      if (p.relative[0] > 0) p.decay_fit = std::sqrt(p.relative[1] / (2 * p.relative[0]));
    } catch (const OffResonant&) {
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Giant-atom optimum

struct RgaOptimum {
  SweepResult grid;
  std::vector<std::vector<double>> grid_points;
  double grid_g = 0, grid_phi = 0;
  double g = 0, phi = 0;  // refined
  ScatteringAmplitudes at_optimum;
  double verify_g = 0, verify_phi = 0;
  std::optional<PopulationReport> numeric;
  std::optional<ScatteringAmplitudes> analytic_at_verify;
};

inline RgaOptimum run_rga_optimum(const ScenarioConfig& sc, bool with_numeric = true, int threads = 1) {
  RgaOptimum out;
  const auto& tpl = sc.emitters.front();
  const double k0 = sc.packet.center_momentum;
  const int cutoff = sc.analysis.cutoff;
  for (double g : sc.sweep.g_values())
    for (double phi : sc.sweep.phi_values()) out.grid_points.push_back({g, phi});
  out.grid = sweep_solve([&](const std::vector<double>& p) { return tpl.with(p[0], p[1]); }, out.grid_points, k0,
                         sc.lattice, cutoff, threads);
  if (!out.grid.argmax) throw SingularSystem("no grid point could be solved");
  out.grid_g = out.grid_points[*out.grid.argmax][0];
  out.grid_phi = out.grid_points[*out.grid.argmax][1];
  auto conv = [&](double g, double phi) {
    try {
      return solve_real_space(build_kernel(tpl.with(g, phi), k0, sc.lattice, cutoff)).up2();
    } catch (const PhysicsError&) {
      return -1.0;
    }
  };
  const auto& sw = sc.sweep;
  const double dg = sw.g_points > 1 ? (sw.g_max - sw.g_min) / (sw.g_points - 1) : 0.0;
  const double dp = sw.phi_points > 1 ? (sw.phi_max - sw.phi_min) / (sw.phi_points - 1) : 0.0;
  double g = out.grid_g, phi = out.grid_phi;
  // Two rounds of coordinate-wise golden section inside one grid cell of the argmax.
  for (int round = 0; round < 2; ++round) {
    if (dg > 0)
      g = golden_section_max([&](double x) { return conv(x, phi); }, std::max(sw.g_min, out.grid_g - dg),
                             std::min(sw.g_max, out.grid_g + dg), sw.g_resolution);
    if (dp > 0)
      phi = golden_section_max([&](double x) { return conv(g, x); }, std::max(sw.phi_min, out.grid_phi - dp),
                               std::min(sw.phi_max, out.grid_phi + dp), sw.phi_resolution);
  }
  out.g = g;
  out.phi = phi;
  out.at_optimum = solve_real_space(build_kernel(tpl.with(g, phi), k0, sc.lattice, cutoff));
  out.verify_g = sw.verify_g.value_or(g);
  out.verify_phi = sw.verify_phi.value_or(phi);
  out.analytic_at_verify = solve_real_space(build_kernel(tpl.with(out.verify_g, out.verify_phi), k0, sc.lattice, cutoff));
  if (with_numeric)
    out.numeric = run_numeric(sc.lattice, {tpl.with(out.verify_g, out.verify_phi)}, sc.packet, sc.evolution,
                              sc.analysis.populations)
                      .final;
  return out;
}

// ---------------------------------------------------------------------------
// Lorentzian against Gaussian packets along a g cut

struct LorentzianRow {
  double g = 0;
  PopulationReport gaussian, lorentzian;
  double deviation = 0;  // |u+|^2 difference
  double width_ratio = 0, width_ratio_predicted = 0;
};

struct LorentzianComparison {
  std::vector<LorentzianRow> rows;
  double max_deviation = 0;
  double max_width_error = 0;  // relative
};

inline LorentzianComparison run_lorentzian_comparison(const ScenarioConfig& sc) {
  LorentzianComparison out;
  const auto& tpl = sc.emitters.front();
  ScenarioConfig gauss = sc, lor = sc;
  gauss.packet.kind = PacketKind::Gaussian;
  lor.packet.kind = PacketKind::Lorentzian;
  const double vk = single_photon_velocity(sc.packet.center_momentum, sc.lattice);
  const double vK =
      doublon_velocity(resonant_doublon_momentum(tpl.detuning, sc.packet.center_momentum, sc.lattice), sc.lattice);
  for (double g : sc.sweep.g_values()) {
    LorentzianRow row;
    row.g = g;
    const EmitterSpec em = tpl.with(g, tpl.phi);
    row.gaussian = run_numeric(sc.lattice, {em}, gauss.packet, sc.evolution, sc.analysis.populations).final;
    double ws = 0, wd = 0;
    row.lorentzian = run_numeric(sc.lattice, {em}, lor.packet, sc.evolution, sc.analysis.populations, {},
                                 [&](const SectorBasis& basis, const StateVector& s) {
                                   const RegionGeometry geo = RegionGeometry::of(em);
                                   if (s.time < sc.evolution.total_time - 1e-9) return;
                                   ws = lobe_moments(basis, s, 1, 0, Side::Right, geo).stddev;
                                   wd = lobe_moments(basis, s, 2, sc.analysis.populations.doublon_spread,
                                                     Side::Right, geo)
                                            .stddev;
                                 })
                         .final;
    row.deviation = std::abs(row.gaussian.u_plus2 - row.lorentzian.u_plus2);
    row.width_ratio = ws > 0 ? wd / ws : 0.0;
    row.width_ratio_predicted = vK / vk;
    out.max_deviation = std::max(out.max_deviation, row.deviation);
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-emitter cascade S -> D -> T

struct CascadeSample {
  double time = 0;
  double P_S = 0, P_D = 0, P_T = 0, P_uc = 0;
  double x_S = 0, x_D = 0, x_T = 0;  // centroids beyond the second emitter
  double w_S = 0, w_D = 0, w_T = 0;  // weights beyond the second emitter
};

struct CascadeResult {
  double K_r = 0, K_t = 0, v_t = 0;
  std::vector<CascadeSample> samples;
  std::vector<std::vector<double>> photon_number;
  double P_S = 0, P_D = 0, P_T = 0;
  std::optional<double> tau_S, tau_D, tau_T;
  int detector = 0;
  bool ordered_arrival = false;
  bool spatial_ordering = false;
  double ordering_time = 0;
  std::optional<double> convergence_shift;
  EvolutionStats stats;
};

inline double crossing_time(const std::vector<CascadeSample>& s, double CascadeSample::*x, double CascadeSample::*w,
                            double detector, double min_weight) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].*w < min_weight || s[i].*x < detector) continue;
    if (s[i - 1].*w < min_weight || s[i - 1].*x >= detector) return s[i].time;
    const double f = (detector - s[i - 1].*x) / (s[i].*x - s[i - 1].*x);
    return s[i - 1].time + f * (s[i].time - s[i - 1].time);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline CascadeResult cascade_once(const ScenarioConfig& sc, int max_spread, bool keep_map) {
  CascadeResult out;
  const auto emitters = sc.built_emitters();
  const RegionGeometry geo2 = RegionGeometry::of(emitters[1]);
  const auto& cut = sc.analysis.populations;
  out.detector = geo2.hi + sc.analysis.detector_offset;
  const auto run = run_numeric(
      sc.lattice, emitters, sc.packet, sc.evolution, cut, TruncationRule{max_spread},
      [&](const SectorBasis& basis, const StateVector& s) {
        const auto r = populations(basis, s, geo2, cut);
        CascadeSample c;
        c.time = s.time;
        c.P_S = r.P_I;
        c.P_D = r.P_D;
        c.P_T = r.P_T;
        c.P_uc = r.P_uc;
        const auto mS = lobe_moments(basis, s, 1, 0, Side::Right, geo2);
        const auto mD = lobe_moments(basis, s, 2, cut.doublon_spread, Side::Right, geo2);
        const auto mT = lobe_moments(basis, s, 3, cut.triplon_spread, Side::Right, geo2);
        c.x_S = mS.mean;
        c.x_D = mD.mean;
        c.x_T = mT.mean;
        c.w_S = mS.weight;
        c.w_D = mD.weight;
        c.w_T = mT.weight;
        out.samples.push_back(c);
        if (keep_map) out.photon_number.push_back(photon_number_map(basis, s));
      },
      false);
  out.P_S = run.final.P_I;
  out.P_D = run.final.P_D;
  out.P_T = run.final.P_T;
  out.stats = run.stats;
  const double wmin = 1e-3;
  auto tau = [&](double CascadeSample::*x, double CascadeSample::*w) -> std::optional<double> {
    const double t = crossing_time(out.samples, x, w, out.detector, wmin);
    return std::isnan(t) ? std::nullopt : std::optional<double>(t);
  };
  out.tau_S = tau(&CascadeSample::x_S, &CascadeSample::w_S);
  out.tau_D = tau(&CascadeSample::x_D, &CascadeSample::w_D);
  out.tau_T = tau(&CascadeSample::x_T, &CascadeSample::w_T);
  out.ordered_arrival = out.tau_S && out.tau_D && out.tau_T && *out.tau_S < *out.tau_D && *out.tau_D < *out.tau_T;
  // Centroid ordering once the triplon lobe holds 90% of its final weight.
  if (!out.samples.empty()) {
    const double wT = out.samples.back().w_T;
    for (const auto& c : out.samples)
      if (wT > wmin && c.w_T >= 0.9 * wT) {
        out.ordering_time = c.time;
        out.spatial_ordering = c.w_S > wmin && c.w_D > wmin && c.x_S > c.x_D && c.x_D > c.x_T;
        break;
      }
  }
  return out;
}

inline CascadeResult run_cascade(const ScenarioConfig& sc, bool keep_map = true) {
  if (sc.emitters.size() != 2) throw InvalidSpec("cascade needs two emitters");
  sc.validate();
  const auto emitters = sc.built_emitters();
  const double k0 = sc.packet.center_momentum;
  const double K_r = resonant_doublon_momentum(emitters[0].detuning, k0, sc.lattice);
  const BandModel band = triplon_band(sc.lattice, uniform_grid(sc.analysis.triplon_grid));
  double K_t = 0;
  try {
    K_t = resonant_triplon_momentum(emitters[1].detuning, K_r, band);
  } catch (const OffResonant& e) {
    throw ResonanceMismatch(std::string("second emitter misses the triplon band: ") + e.what());
  }
  CascadeResult out = cascade_once(sc, sc.analysis.max_spread, keep_map);
  out.K_r = K_r;
  out.K_t = K_t;
  out.v_t = band.triplon_velocity_at(K_t);
  if (sc.analysis.convergence_spread > sc.analysis.max_spread) {
    const CascadeResult ref = cascade_once(sc, sc.analysis.convergence_spread, false);
    out.convergence_shift =
        std::max({std::abs(ref.P_S - out.P_S), std::abs(ref.P_D - out.P_D), std::abs(ref.P_T - out.P_T)});
    if (*out.convergence_shift > sc.analysis.convergence_tolerance)
      throw TruncationNotConverged("final populations shift by " + fmt_sci(*out.convergence_shift) +
                                   " between spread cutoffs " + std::to_string(sc.analysis.max_spread) + " and " +
                                   std::to_string(sc.analysis.convergence_spread));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_space_time(const std::string& path, const std::vector<double>& times,
                             const std::vector<std::vector<double>>& grid) {
  std::ofstream out(path);
  out << "# time site photon_number\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t n = 0; n < grid[i].size(); ++n)
      out << fmt_fixed(times[i]) << ' ' << n << ' ' << fmt_fixed(grid[i][n]) << '\n';
    out << '\n';
  }
}

inline void write_population_series(const std::string& path, const std::vector<double>& times,
                                    const std::vector<PopulationReport>& s) {
  std::ofstream out(path);
  out << "time,P0,P_I,P_II,P_D,P_III,P_T,P_uc,t2,r2,u_plus2,u_minus2,in_region";
  const std::size_t ne = s.empty() ? 0 : s.front().emitter_excited.size();
  for (std::size_t e = 0; e < ne; ++e) out << ",emitter" << e;
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& r = s[i];
    out << fmt_fixed(times[i]);
    for (double v : {r.P0, r.P_I, r.P_II, r.P_D, r.P_III, r.P_T, r.P_uc, r.t2, r.r2, r.u_plus2, r.u_minus2, r.in_region})
      out << ',' << fmt_fixed(v);
    for (double v : r.emitter_excited) out << ',' << fmt_fixed(v);
    out << '\n';
  }
}

inline void write_sweep_table(const std::string& path, const SweepResult& res, const std::vector<std::string>& names) {
  std::ofstream out(path);
  for (const auto& n : names) out << n << ',';
  out << "t2,r2,u_plus2,u_minus2,emitter_proxy,flux_residual,error\n";
  for (const auto& row : res.rows) {
    for (double p : row.params) out << fmt_fixed(p) << ',';
    if (row.amplitudes) {
      const auto& a = *row.amplitudes;
      out << fmt_fixed(a.t2()) << ',' << fmt_fixed(a.r2()) << ',' << fmt_fixed(a.up2()) << ',' << fmt_fixed(a.um2())
          << ',' << fmt_fixed(a.emitter_proxy()) << ',' << fmt_sci(a.flux_residual) << ",\n";
    } else {
      out << ",,,,,," << row.error << '\n';
    }
  }
}

inline void write_comparison_table(const std::string& path, const SweepComparison& c) {
  std::ofstream out(path);
  out << "g,phi";
  for (const char* src : {"numeric", "pga", "pointlike"})
    for (const char* ch : {"t2", "r2", "u_plus2", "u_minus2", "emitter"}) out << ',' << src << '_' << ch;
  out << ",numeric_residue,norm_drift,flux_pga,flux_pointlike\n";
  for (const auto& r : c.rows) {
    out << fmt_fixed(r.g) << ',' << fmt_fixed(r.phi);
    for (const auto* s : {&r.numeric, &r.pga, &r.pointlike})
      for (double v : {s->t2, s->r2, s->up2, s->um2, s->emitter}) out << ',' << fmt_fixed(v);
    out << ',' << fmt_fixed(r.residue) << ',' << fmt_sci(r.norm_drift) << ',' << fmt_sci(r.flux_pga) << ','
        << fmt_sci(r.flux_pointlike) << '\n';
  }
}

inline void write_cascade_series(const std::string& path, const CascadeResult& c) {
  std::ofstream out(path);
  out << "time,P_S,P_D,P_T,P_uc,x_S,x_D,x_T,w_S,w_D,w_T\n";
  for (const auto& s : c.samples) {
    out << fmt_fixed(s.time);
    for (double v : {s.P_S, s.P_D, s.P_T, s.P_uc, s.x_S, s.x_D, s.x_T, s.w_S, s.w_D, s.w_T}) out << ',' << fmt_fixed(v);
    out << '\n';
  }
}

inline void write_profiles(const std::string& dir, const SnapshotProfiles& p) {
  {
    std::ofstream out(dir + "/profile_single.csv");
    out << "site,intensity\n";
    for (std::size_t n = 0; n < p.single.size(); ++n) out << n << ',' << fmt_fixed(p.single[n]) << '\n';
  }
  std::ofstream out(dir + "/profile_doublon.csv");
  out << "center,r,intensity\n";
  for (std::size_t r = 0; r < p.doublon.size(); ++r)
    for (std::size_t s = 0; s < p.doublon[r].size(); ++s)
      if (p.doublon[r][s] != 0.0) out << fmt_fixed(0.5 * double(s)) << ',' << r << ',' << fmt_fixed(p.doublon[r][s]) << '\n';
}

}  // namespace wqed
