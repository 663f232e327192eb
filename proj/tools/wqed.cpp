// wqed: command-line front end for band tables, analytic solves, evolutions,
// sweeps and cascades. Exit codes: 0 ok, 1 failed validation or I/O, 2 config
// error, 3 physics error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include <wqed/bands.hpp>
#include <wqed/config.hpp>
#include <wqed/experiments.hpp>
#include <wqed/pga.hpp>
#include <wqed/validation.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wqed;

namespace {

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int threads = 0;
  int verbosity = 0;
  bool resume = false;
};

struct RunContext {
  Invocation inv;
  Config cfg;
  fs::path out;
  std::vector<std::string> outputs;
  json summary = json::object();

  void log(int level, const std::string& msg) const {
    if (inv.verbosity >= level) std::cerr << msg << '\n';
  }
  std::string file(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
};

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json complex_list(const std::vector<cplx>& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back(complex_json(z));
  return a;
}

json report_json(const PopulationReport& r) {
  return {{"P0", r.P0},       {"P_I", r.P_I},         {"P_II", r.P_II},           {"P_D", r.P_D},
          {"P_III", r.P_III}, {"P_T", r.P_T},         {"P_uc", r.P_uc},           {"t2", r.t2},
          {"r2", r.r2},       {"u_plus2", r.u_plus2}, {"u_minus2", r.u_minus2},   {"in_region", r.in_region},
          {"emitters", r.emitter_excited}};
}

json amplitudes_json(const ScatteringAmplitudes& a) {
  return {{"t", complex_json(a.t)},
          {"r", complex_json(a.r)},
          {"u_plus", complex_json(a.u_plus)},
          {"u_minus", complex_json(a.u_minus)},
          {"t2", a.t2()},
          {"r2", a.r2()},
          {"u_plus2", a.up2()},
          {"u_minus2", a.um2()},
          {"emitter_proxy", a.emitter_proxy()},
          {"flux_residual", a.flux_residual},
          {"v_k", a.v_k},
          {"v_K", a.v_K}};
}

void write_json(const std::string& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

int threads_for(const Invocation& inv) { return inv.threads > 0 ? inv.threads : default_thread_count(); }

// ---------------------------------------------------------------------------

void cmd_bands(RunContext& ctx) {
  auto& cfg = ctx.cfg;
  LatticeSpec lat;
  int points = 65, tgrid = 33;
  if (cfg.has("emitters") || cfg.has("emitter.site")) {
    // A full scenario file: read it whole so only truly unknown keys are rejected.
    const ScenarioConfig sc = load_scenario(cfg);
    lat = sc.lattice;
    points = sc.band_points;
    tgrid = sc.analysis.triplon_grid;
  } else {
    lat.n_sites = cfg.get_int("lattice.sites", 64);
    lat.hopping = cfg.get_double("lattice.hopping", 1.0);
    lat.nonlinearity = cfg.get_double("lattice.nonlinearity", 6.0);
    points = cfg.get_int("bands.points", 65);
    tgrid = cfg.get_int("analysis.triplon_grid", 33);
  }
  const int spread = cfg.get_int("analysis.triplon_max_spread", 12);
  const auto grid = uniform_grid(points);
  write_band_csv(ctx.file("bands_single.csv"), single_photon_table(lat, grid));
  write_band_csv(ctx.file("bands_doublon.csv"), doublon_table(lat, grid));
  if (lat.nonlinearity > 0) {
    const auto band = triplon_band(lat, uniform_grid(tgrid), spread);
    write_band_csv(ctx.file("bands_triplon.csv"), triplon_rows(*band.triplon_table));
    ctx.summary["triplon_range"] = {band.triplon_energy_at(0), band.triplon_energy_at(kPi)};
  }
}

void cmd_solve(RunContext& ctx) {
  const ScenarioConfig sc = load_scenario(ctx.cfg);
  const std::string inc = ctx.cfg.get_string("solve.incidence", "left");
  if (inc != "left" && inc != "right") throw ConfigError("solve.incidence must be left or right");
  const Incidence dir = inc == "left" ? Incidence::FromLeft : Incidence::FromRight;
  const EmitterSpec e = sc.emitters.front().build();
  const auto k = build_kernel(e, sc.packet.center_momentum, sc.lattice, sc.analysis.cutoff);
  const auto a = solve_real_space(k, dir);
  const auto b = solve_momentum_space(k, dir);
  json j = amplitudes_json(a);
  j["K_r"] = k.K_r;
  j["S_PGA"] = k.pga_size();
  j["tail_weight"] = k.tail_weight;
  j["sites"] = a.sites;
  j["region_R"] = complex_list(a.R);
  j["region_L"] = complex_list(a.L);
  j["P_plus_R"] = complex_list(a.P_plus_R);
  j["P_plus_L"] = complex_list(a.P_plus_L);
  j["P_minus_R"] = complex_list(a.P_minus_R);
  j["P_minus_L"] = complex_list(a.P_minus_L);
  j["momentum_space_distance"] = detail::amplitude_distance(a, b);
  j["rcond"] = a.rcond;
  write_json(ctx.file("solve.json"), j);
  ctx.summary = {{"t2", a.t2()}, {"r2", a.r2()}, {"u_plus2", a.up2()}, {"u_minus2", a.um2()},
                 {"flux_residual", a.flux_residual}};
  std::printf("t2=%s r2=%s u+2=%s u-2=%s flux=%s\n", fmt_fixed(a.t2()).c_str(), fmt_fixed(a.r2()).c_str(),
              fmt_fixed(a.up2()).c_str(), fmt_fixed(a.um2()).c_str(), fmt_sci(a.flux_residual).c_str());
}

void cmd_evolve(RunContext& ctx) {
  ScenarioConfig sc = load_scenario(ctx.cfg);
  const bool store = ctx.cfg.get_bool("evolution.store_snapshots", false);
  sc.evolution.threads = threads_for(ctx.inv);
  sc.validate();
  ctx.cfg.check_all_used();
  SnapshotOptions snaps;
  if (store) {
    snaps.directory = (ctx.out / "snapshots").string();
    snaps.resume = ctx.inv.resume;
    snaps.config = ctx.cfg.resolved();
  }
  std::optional<SnapshotProfiles> profiles;
  const double T = sc.evolution.total_time;
  const EvolutionMap map = run_evolution_map(
      sc,
      [&](const SectorBasis& basis, const StateVector& s) {
        ctx.log(1, "t=" + fmt_fixed(s.time));
        if (s.time >= T - 1e-9) profiles = snapshot_profiles(basis, s, sc);
      },
      store ? &snaps : nullptr);
  ctx.summary["norm_drift"] = map.stats.max_norm_drift;
  ctx.summary["energy_drift"] = map.stats.max_energy_drift;
  ctx.summary["matvecs"] = map.stats.matvecs;
  write_space_time(ctx.file("space_time.dat"), map.times, map.photon_number);
  write_population_series(ctx.file("populations.csv"), map.times, map.series);
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  ctx.summary["final"] = report_json(map.final);
  ctx.summary["v_photon"] = {{"predicted", map.v_photon_predicted}, {"measured", opt(map.v_photon_measured)}};
  if (map.has_doublon_channel)
    ctx.summary["v_doublon"] = {{"predicted", map.v_doublon_predicted}, {"measured", opt(map.v_doublon_measured)}};
  if (profiles) {
    write_profiles(ctx.out.string(), *profiles);
    ctx.outputs.push_back("profile_single.csv");
    ctx.outputs.push_back("profile_doublon.csv");
    const auto& p = *profiles;
    ctx.summary["profiles"] = {
        {"photon", {{"center", p.photon.center}, {"width", p.photon.width}, {"predicted_center", p.photon.predicted_center},
                    {"predicted_width", p.photon.predicted_width}}},
        {"doublon", {{"center", p.doublon_fit.center}, {"width", p.doublon_fit.width},
                     {"predicted_center", p.doublon_fit.predicted_center},
                     {"predicted_width", p.doublon_fit.predicted_width}}},
        {"decay_fit", p.decay_fit},
        {"decay_predicted", p.decay_predicted}};
  }
}

void cmd_sweep(RunContext& ctx) {
  ScenarioConfig sc = load_scenario(ctx.cfg);
  const int threads = threads_for(ctx.inv);
  sc.evolution.threads = 1;
  sc.validate();
  ctx.cfg.check_all_used();
  const std::string& mode = sc.sweep_mode;
  if (mode == "analytic" || mode == "rga_optimum") {
    const bool numeric = mode == "rga_optimum";
    const auto opt = run_rga_optimum(sc, numeric, threads);
    write_sweep_table(ctx.file("sweep.csv"), opt.grid, {"g", "phi"});
    ctx.summary["grid_argmax"] = {{"g", opt.grid_g}, {"phi_over_pi", opt.grid_phi / kPi}};
    ctx.summary["refined"] = {{"g", opt.g}, {"phi_over_pi", opt.phi / kPi}, {"amplitudes", amplitudes_json(opt.at_optimum)}};
    if (opt.numeric) {
      ctx.summary["verification"] = {{"g", opt.verify_g},
                                     {"phi_over_pi", opt.verify_phi / kPi},
                                     {"numeric", report_json(*opt.numeric)},
                                     {"analytic", amplitudes_json(*opt.analytic_at_verify)}};
    }
    std::printf("argmax g=%s phi=%spi |u+|^2=%s\n", fmt_fixed(opt.g).c_str(), fmt_fixed(opt.phi / kPi).c_str(),
                fmt_fixed(opt.at_optimum.up2()).c_str());
  } else if (mode == "single_emitter") {
    sc.evolution.threads = threads;
    const auto cmp = run_single_emitter_sweep(sc);
    write_comparison_table(ctx.file("comparison.csv"), cmp);
    ctx.summary["max_deviation_pga"] = cmp.max_dev_pga;
    ctx.summary["max_deviation_pointlike"] = cmp.max_dev_pointlike;
    ctx.summary["max_asymmetry"] = cmp.max_asymmetry;
    std::printf("max deviation pga=%s pointlike=%s asymmetry=%s\n", fmt_fixed(cmp.max_dev_pga).c_str(),
                fmt_fixed(cmp.max_dev_pointlike).c_str(), fmt_fixed(cmp.max_asymmetry).c_str());
  } else if (mode == "lorentzian") {
    sc.evolution.threads = threads;
    const auto cmp = run_lorentzian_comparison(sc);
    std::ofstream out(ctx.file("lorentzian.csv"));
    out << "g,gaussian_u_plus2,lorentzian_u_plus2,deviation,width_ratio,width_ratio_predicted\n";
    for (const auto& r : cmp.rows)
      out << fmt_fixed(r.g) << ',' << fmt_fixed(r.gaussian.u_plus2) << ',' << fmt_fixed(r.lorentzian.u_plus2) << ','
          << fmt_fixed(r.deviation) << ',' << fmt_fixed(r.width_ratio) << ',' << fmt_fixed(r.width_ratio_predicted)
          << '\n';
    ctx.summary["max_deviation"] = cmp.max_deviation;
  } else {
    throw ConfigError("sweep.mode must be analytic, rga_optimum, single_emitter or lorentzian");
  }
}

void cmd_cascade(RunContext& ctx) {
  ScenarioConfig sc = load_scenario(ctx.cfg);
  sc.evolution.threads = threads_for(ctx.inv);
  ctx.cfg.check_all_used();
  const auto c = run_cascade(sc);
  write_cascade_series(ctx.file("cascade.csv"), c);
  std::vector<double> times;
  for (const auto& s : c.samples) times.push_back(s.time);
  write_space_time(ctx.file("space_time.dat"), times, c.photon_number);
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  ctx.summary = {{"K_r", c.K_r},
                 {"K_t", c.K_t},
                 {"v_triplon", c.v_t},
                 {"P_S", c.P_S},
                 {"P_D", c.P_D},
                 {"P_T", c.P_T},
                 {"detector", c.detector},
                 {"tau", {opt(c.tau_S), opt(c.tau_D), opt(c.tau_T)}},
                 {"ordered_arrival", c.ordered_arrival},
                 {"spatial_ordering", c.spatial_ordering},
                 {"ordering_time", c.ordering_time},
                 {"convergence_shift", opt(c.convergence_shift)},
                 {"norm_drift", c.stats.max_norm_drift}};
  std::printf("P_S=%s P_D=%s P_T=%s ordered=%s\n", fmt_fixed(c.P_S).c_str(), fmt_fixed(c.P_D).c_str(),
              fmt_fixed(c.P_T).c_str(), c.ordered_arrival ? "yes" : "no");
}

bool cmd_validate(RunContext& ctx) {
  bool ok = true;
  json checks = json::array();
  for (const auto& r : run_validation_suite()) {
    std::printf("%s  %s  (%s <= %s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), fmt_sci(r.value).c_str(),
                fmt_sci(r.limit).c_str());
    ok = ok && r.passed;
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"limit", r.limit}});
  }
  ctx.summary["checks"] = checks;
  return ok;
}

void write_manifest(RunContext& ctx) {
  json m;
  m["command"] = ctx.inv.command;
  m["version"] = WQED_VERSION;
  m["git"] = WQED_GIT_HASH;
  m["threads"] = threads_for(ctx.inv);
  m["config"] = ctx.cfg.resolved();
  m["overrides"] = ctx.cfg.overrides();
  m["outputs"] = ctx.outputs;
  m["summary"] = ctx.summary;
  write_json((ctx.out / "manifest.json").string(), m);
}

int dispatch(Invocation inv) {
  RunContext ctx;
  if (inv.command == "replay") {
    std::ifstream in(inv.config_path);
    if (!in) throw ConfigError("cannot open manifest " + inv.config_path);
    json m = json::parse(in);
    inv.command = m.at("command").get<std::string>();
    if (inv.threads == 0) inv.threads = m.value("threads", 0);
  }
  ctx.inv = inv;
  ctx.cfg = inv.config_path.empty() ? Config{} : Config::load(inv.config_path);
  for (const auto& o : inv.overrides) ctx.cfg.apply_override(o);
  ctx.cfg.get_string("scenario", inv.command);
  const std::string cfg_out = ctx.cfg.get_string("output", "out");
  ctx.out = inv.out_dir.empty() ? fs::path(cfg_out) : fs::path(inv.out_dir);
  fs::create_directories(ctx.out);
  bool ok = true;
  if (inv.command == "bands")
    cmd_bands(ctx);
  else if (inv.command == "solve")
    cmd_solve(ctx);
  else if (inv.command == "evolve")
    cmd_evolve(ctx);
  else if (inv.command == "sweep")
    cmd_sweep(ctx);
  else if (inv.command == "cascade")
    cmd_cascade(ctx);
  else if (inv.command == "validate")
    ok = cmd_validate(ctx);
  else
    throw ConfigError("unknown command '" + inv.command + "'");
  ctx.cfg.check_all_used();
  write_manifest(ctx);
  ctx.log(1, "wrote " + (ctx.out / "manifest.json").string());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waveguide QED scattering: bound-state bands, analytic PGA solver, time evolution"};
  app.require_subcommand(1);
  Invocation inv;
  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("-c,--config", inv.config_path, "config file (or run manifest)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", inv.out_dir, "output directory (overrides the config's output key)");
    sub->add_option("-s,--set", inv.overrides, "override as section.key=value")->take_all();
    sub->add_option("-t,--threads", inv.threads, "worker threads (default: WQED_THREADS or 1)");
    sub->add_flag("-v,--verbose", inv.verbosity, "more progress output");
  };
  common(app.add_subcommand("bands", "band tables E_k, E_K and the triplon band as CSV"), false);
  common(app.add_subcommand("solve", "single analytic scattering solve, JSON output"), true);
  auto* evolve = app.add_subcommand("evolve", "time evolution with space-time map and lobe kinematics");
  common(evolve, true);
  evolve->add_flag("--resume", inv.resume, "continue from stored snapshots");
  common(app.add_subcommand("sweep", "analytic or numeric parameter sweeps"), true);
  common(app.add_subcommand("cascade", "two-emitter S -> D -> T cascade"), true);
  common(app.add_subcommand("validate", "oracle checks, one pass/fail line each"), false);
  auto* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
  replay->add_option("manifest", inv.config_path, "manifest.json")->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", inv.out_dir, "output directory");
  replay->add_option("-t,--threads", inv.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) inv.command = sub->get_name();

  try {
    return dispatch(inv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const PhysicsError& e) {
    std::cerr << e.name() << '\n' << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
