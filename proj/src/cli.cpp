#include "cargoflow/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cargoflow/io.hpp"
#include "cargoflow/manifest.hpp"
#include "cargoflow/pde.hpp"
#include "cargoflow/rng.hpp"
#include "cargoflow/spatial.hpp"
#include "cargoflow/spectral.hpp"

namespace cargoflow {

namespace {

using io::format_double;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void emit_manifest(const std::string& command,
                   const std::vector<std::string>& argv, std::uint64_t seed,
                   const std::vector<std::string>& artifacts, double wall_s,
                   const std::string& path) {
  RunManifest m;
  m.command = command;
  m.argv = argv;
  m.seed = seed;
  m.artifacts = artifacts;
  m.wall_time_s = wall_s;
  m.version = version_string();
  write_manifest(m, path);
}

std::vector<double> parse_range(const std::string& spec) {
  // "a:b:n" inclusive linear range
  double a, b;
  int n;
  char c1, c2;
  std::istringstream ss(spec);
  if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 2)
    throw Error("bad range '" + spec + "', expected a:b:n with n >= 2");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

std::vector<double> parse_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::map<std::string, double> parse_kv(const std::string& spec) {
  std::map<std::string, double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("bad key=value item '" + item + "'");
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

Rect parse_rect(const std::string& spec) {
  auto v = parse_list(spec);
  if (v.size() != 4) throw Error("bad domain '" + spec + "', expected x0,y0,x1,y1");
  Rect r{v[0], v[1], v[2], v[3]};
  if (r.width() <= 0 || r.height() <= 0) throw Error("domain has no area");
  return r;
}

void print_effective(std::ostream& os, const EffectiveTransport& eff) {
  os << "method = " << method_name(eff.method) << '\n';
  os << "v_eff = " << format_double(eff.v_eff);
  if (eff.v_se) os << " +- " << format_double(*eff.v_se);
  os << '\n';
  os << "sigma_eff = " << format_double(eff.sigma_eff);
  if (eff.sigma_se) os << " +- " << format_double(*eff.sigma_se);
  os << '\n';
}

// ---------------------------------------------------------------------------
// subcommand implementations
// ---------------------------------------------------------------------------

int cmd_effective(const std::string& model_path) {
  ModelSpec model = io::load_model(model_path);
  EffectiveTransport eff = effective_transport(model);
  print_effective(std::cout, eff);
  Eigen::VectorXd pi = stationary_distribution(model).pi;
  std::cout << "pi =";
  for (int j = 0; j < model.n_states; ++j)
    std::cout << ' ' << format_double(pi(j));
  std::cout << '\n';
  for (int j = 0; j < model.n_states; ++j)
    std::cout << "state " << j << " (" << model.state_labels[j]
              << "): pi = " << format_double(pi(j)) << '\n';
  return 0;
}

int cmd_dispersion(const std::string& model_path, const std::string& nu_range,
                   const std::string& out_path,
                   const std::vector<std::string>& argv, const Timer& timer) {
  ModelSpec model = io::load_model(model_path);
  std::vector<double> nus = parse_range(nu_range);
  std::vector<std::vector<double>> rows;
  bool warned = false;
  for (double nu : nus) {
    DispersionPoint p = dispersion_eigenvalue(model, nu);
    if (p.branch_warning && !warned) {
      std::cerr << "warning: eigenvalue branches separated by less than 1e-8 near nu = "
                << format_double(nu) << '\n';
      warned = true;
    }
    rows.push_back({p.nu, p.lambda, p.branch_separation});
  }
  if (out_path.empty()) {
    std::cout << "nu,lambda,branch_separation\n";
    for (const auto& r : rows)
      std::cout << format_double(r[0]) << ',' << format_double(r[1]) << ','
                << format_double(r[2]) << '\n';
  } else {
    io::write_table_csv(out_path, "dispersion", {"nu", "lambda", "branch_separation"},
                        rows);
    emit_manifest("dispersion", argv, 0, {out_path}, timer.seconds(),
                  out_path + ".manifest.json");
  }
  return 0;
}

int cmd_simulate(const std::string& model_path, std::uint64_t cycles,
                 std::uint64_t seed, const std::string& sojourn_spec,
                 int base_state, const std::string& csv_path, int bootstrap,
                 int jobs, const std::vector<std::string>& argv,
                 const Timer& timer) {
  ModelSpec model = io::load_model(model_path);
  SojournModel sm;
  if (sojourn_spec.empty() || sojourn_spec == "exp") {
    sm = sojourn_from_model(model, base_state);
  } else if (sojourn_spec.rfind("gamma:", 0) == 0) {
    double shape = std::stod(sojourn_spec.substr(6));
    sm = gamma_sojourn_from_model(model, shape, base_state);
  } else {
    throw Error("unknown sojourn spec '" + sojourn_spec + "' (use exp or gamma:SHAPE)");
  }
  SimOptions opts;
  opts.workers = jobs;
  auto samples = simulate_cycles(sm, model, cycles, seed, opts);
  RenewalEstimate est = bootstrap > 0
                            ? estimate_effective_bootstrap(samples, bootstrap, seed)
                            : estimate_effective(samples);
  if (est.degenerate_dt_variance)
    std::cerr << "warning: Var(dT) = 0 (deterministic sojourns); estimate still valid\n";
  print_effective(std::cout, est.as_effective());
  std::cout << "n_cycles = " << est.n_cycles << '\n'
            << "base_state = " << sm.base_state << '\n'
            << "mean_dt = " << format_double(est.moments.mean_dt) << '\n'
            << "mean_dx = " << format_double(est.moments.mean_dx) << '\n'
            << "var_dt = " << format_double(est.moments.var_dt) << '\n'
            << "var_dx = " << format_double(est.moments.var_dx) << '\n'
            << "cov_dx_dt = " << format_double(est.moments.cov) << '\n';
  std::vector<std::string> artifacts;
  if (!csv_path.empty()) {
    io::write_cycles_csv(csv_path, samples);
    artifacts.push_back(csv_path);
    emit_manifest("simulate", argv, seed, artifacts, timer.seconds(),
                  csv_path + ".manifest.json");
  }
  return 0;
}

int cmd_network(const std::string& kind, const std::string& domain_spec, int n,
                double p_down, const std::string& origin_spec, double kappa,
                const std::string& length_spec, std::uint64_t seed,
                const std::string& out_path, const std::string& raster_spec,
                const std::string& field_prefix,
                const std::vector<std::string>& argv, const Timer& timer) {
  Rect domain = parse_rect(domain_spec);
  LengthDist dist = LengthDist::full_span();
  if (!length_spec.empty() && length_spec != "full") {
    if (length_spec.rfind("fixed:", 0) == 0) {
      dist = LengthDist::fixed(std::stod(length_spec.substr(6)));
    } else if (length_spec.rfind("uniform:", 0) == 0) {
      auto v = parse_list(length_spec.substr(8));
      if (v.size() != 2) throw Error("uniform length needs lo,hi");
      dist = LengthDist::uniform(v[0], v[1]);
    } else {
      throw Error("unknown length spec '" + length_spec + "'");
    }
  }
  std::vector<FilamentSegment> segments;
  if (kind == "parallel") {
    segments = parallel_network(domain, n, p_down, dist, seed);
  } else if (kind == "radial") {
    auto v = parse_list(origin_spec);
    if (v.size() != 2) throw Error("radial network needs --origin x,y");
    if (dist.kind == LengthDist::Kind::FullSpan)
      dist = LengthDist::fixed(0.25 * std::min(domain.width(), domain.height()));
    segments = radial_network(domain, {v[0], v[1]}, n, kappa, dist, seed);
  } else {
    throw Error("unknown network kind '" + kind + "'");
  }
  io::write_segments_csv(out_path, segments);
  std::vector<std::string> artifacts{out_path};
  if (!raster_spec.empty()) {
    auto v = parse_list(raster_spec);
    if (v.size() != 2) throw Error("raster spec needs nx,ny");
    GridSpec g;
    g.nx = static_cast<int>(v[0]);
    g.ny = static_cast<int>(v[1]);
    g.x0 = domain.x0;
    g.y0 = domain.y0;
    g.dx = domain.width() / g.nx;
    g.dy = domain.height() / g.ny;
    NetworkField field = rasterize(segments, g);
    std::string prefix = field_prefix.empty() ? out_path : field_prefix;
    io::write_field(prefix + ".rho.field", g, field.rho);
    io::write_field(prefix + ".dirx.field", g, field.dir_x);
    io::write_field(prefix + ".diry.field", g, field.dir_y);
    io::write_field(prefix + ".polarity.field", g, field.polarity);
    artifacts.push_back(prefix + ".rho.field");
    artifacts.push_back(prefix + ".dirx.field");
    artifacts.push_back(prefix + ".diry.field");
    artifacts.push_back(prefix + ".polarity.field");
  }
  emit_manifest("network", argv, seed, artifacts, timer.seconds(),
                out_path + ".manifest.json");
  std::cout << "segments = " << segments.size() << '\n';
  return 0;
}

void deposit_from_spec(StateFields& fields, const ModelSpec& model,
                       const std::string& init_spec) {
  Eigen::VectorXd pi = stationary_distribution(model).pi;
  auto colon = init_spec.find(':');
  std::string kind = init_spec.substr(0, colon);
  std::map<std::string, double> kv;
  if (colon != std::string::npos) kv = parse_kv(init_spec.substr(colon + 1));
  auto get = [&](const char* key, std::optional<double> fallback =
                                      std::nullopt) -> double {
    auto it = kv.find(key);
    if (it != kv.end()) return it->second;
    if (fallback) return *fallback;
    throw Error(std::string("init spec is missing '") + key + "'");
  };
  const GridSpec& g = fields.grid;
  double cx_default = g.x0 + 0.5 * g.width();
  double cy_default = g.y0 + 0.5 * g.height();
  if (kind == "gaussian") {
    deposit_gaussian(fields, pi, get("cx", cx_default), get("cy", cy_default),
                     get("sigma"), get("mass", 1.0));
  } else if (kind == "delta") {
    deposit_delta(fields, pi, get("cx", cx_default), get("cy", cy_default),
                  get("mass", 1.0));
  } else if (kind == "uniform") {
    deposit_uniform(fields, pi, get("level", 1.0));
  } else {
    throw Error("unknown init spec '" + kind + "' (gaussian|delta|uniform)");
  }
}

int cmd_pde(const std::string& model_path, const std::string& network_path,
            const std::string& rho_path, const std::string& grid_spec,
            const std::string& domain_spec, const std::string& init_spec,
            double t_end, const std::string& snap_spec, double fixed_dt,
            int jobs, const std::string& out_prefix,
            const std::vector<std::string>& argv, const Timer& timer) {
  ModelSpec model = io::load_model(model_path);
  Rect domain = parse_rect(domain_spec);
  auto gv = parse_list(grid_spec);
  if (gv.size() != 2) throw Error("grid spec needs nx,ny");
  GridSpec g;
  g.nx = static_cast<int>(gv[0]);
  g.ny = static_cast<int>(gv[1]);
  g.x0 = domain.x0;
  g.y0 = domain.y0;
  g.dx = domain.width() / g.nx;
  g.dy = domain.height() / g.ny;

  SolverConfig cfg;
  cfg.t_end = t_end;
  cfg.workers = jobs;
  if (fixed_dt > 0) cfg.fixed_dt = fixed_dt;
  if (!snap_spec.empty()) cfg.snapshot_times = parse_list(snap_spec);

  std::optional<Solver> solver;
  if (!network_path.empty()) {
    auto segments = io::read_segments_csv(network_path);
    NetworkField field = rasterize(segments, g);
    solver.emplace(model, spatial_rates(model, field, model.bound_states), true,
                   cfg);
  } else if (!rho_path.empty()) {
    RhoProfile profile = io::load_rho_profile(rho_path);
    // the profile lives on normalized x in [0,1]
    NetworkField field = field_from_profile(g, [&](double x) {
      return profile.at((x - domain.x0) / domain.width());
    });
    solver.emplace(model, spatial_rates(model, field, model.bound_states), false,
                   cfg);
  } else {
    solver.emplace(model, g, cfg);
  }

  StateFields fields = StateFields::zeros(g, model.n_states);
  deposit_from_spec(fields, model, init_spec);
  RunResult result = solver->run(std::move(fields));

  std::vector<std::string> artifacts;
  std::vector<std::vector<double>> rows;
  for (const auto& m : result.moments)
    rows.push_back({m.t, m.mass, m.mean_y, m.var_y});
  std::string moments_path = out_prefix + "_moments.csv";
  io::write_table_csv(moments_path, "moments", {"t", "mass", "mean_y", "var_y"},
                      rows);
  artifacts.push_back(moments_path);
  for (size_t k = 0; k < result.snapshots.size(); ++k) {
    const StateFields& snap = result.snapshots[k];
    for (int j = 0; j < snap.n_states; ++j) {
      std::ostringstream name;
      name << out_prefix << "_snap" << k << "_state" << j << ".field";
      io::write_field(name.str(), g, snap.u[j]);
      artifacts.push_back(name.str());
    }
  }
  emit_manifest("pde", argv, 0, artifacts, timer.seconds(),
                out_prefix + ".manifest.json");
  std::cout << "steps = " << result.steps << '\n'
            << "final_mass = " << format_double(result.moments.back().mass) << '\n'
            << "clipped_cells = " << result.clipped_cells << '\n';
  return 0;
}

int cmd_spatial_effective(const std::string& model_path, const std::string& rho_path,
                          int grid_points) {
  ModelSpec model = io::load_model(model_path);
  RhoProfile rho = io::load_rho_profile(rho_path);
  if (model.bound_states.empty())
    throw Error("spatial-effective: the model file must flag bound states");
  EffectiveTransport eff =
      spatial_effective_transport(model, rho, model.bound_states, grid_points);
  print_effective(std::cout, eff);
  // homogeneous comparator with the mean binding availability
  ModelSpec mean_model = model;
  mean_model.rates = modulate_rates(model, rho.mean(), model.bound_states);
  EffectiveTransport homog = effective_transport(mean_model);
  std::cout << "homogeneous_mean_rho_v_eff = " << format_double(homog.v_eff) << '\n'
            << "homogeneous_mean_rho_sigma_eff = " << format_double(homog.sigma_eff)
            << '\n';
  return 0;
}

int cmd_frap_synth(const std::string& model_path, const std::string& protocol_path,
                   const std::string& out_path, double noise, std::uint64_t seed,
                   int jobs, const std::vector<std::string>& argv,
                   const Timer& timer) {
  ModelSpec model = io::load_model(model_path);
  FrapProtocol protocol = io::load_protocol(protocol_path);
  RecoveryCurve curve = synthesize(model, protocol, jobs);
  if (noise > 0) {
    for (size_t i = 0; i < curve.values.size(); ++i) {
      RngStream rng(seed, i);
      curve.values[i] *= 1.0 + noise * rng.normal();
    }
  }
  io::write_recovery_csv(out_path, curve);
  emit_manifest("frap-synth", argv, seed, {out_path}, timer.seconds(),
                out_path + ".manifest.json");
  std::cout << "points = " << curve.values.size() << '\n';
  return 0;
}

ModelTemplate template_by_name(const std::string& name) {
  if (name == "two_state") return ModelTemplate::two_state();
  if (name == "reaction_diffusion") return ModelTemplate::reaction_diffusion();
  throw Error("unknown model template '" + name + "'");
}

std::vector<std::vector<double>> parse_sweep_grids(const ModelTemplate& tmpl,
                                                   const std::string& spec) {
  // "d=1e-2:1e2:5,c=1e-2:1e2:5,..." log-spaced per parameter
  std::map<std::string, std::vector<double>> grids;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("bad grid item '" + item + "'");
    std::string name = item.substr(0, eq);
    std::string range = item.substr(eq + 1);
    double lo, hi;
    int count;
    char c1, c2;
    std::istringstream rs(range);
    if (!(rs >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
      throw Error("bad grid range '" + range + "' (lo:hi:count)");
    grids[name] = count == 1 ? std::vector<double>{lo} : log_grid(lo, hi, count);
  }
  std::vector<std::vector<double>> out;
  for (const auto& name : tmpl.param_names) {
    auto it = grids.find(name);
    if (it == grids.end())
      throw Error("sweep grid is missing parameter '" + name + "'");
    out.push_back(it->second);
    grids.erase(it);
  }
  if (!grids.empty())
    throw Error("sweep grid has unknown parameter '" + grids.begin()->first + "'");
  return out;
}

void write_sweep_csv(const std::string& path, const ModelTemplate& tmpl,
                     const std::vector<SweepRow>& rows) {
  std::vector<std::string> cols = tmpl.param_names;
  cols.push_back("objective");
  std::vector<std::vector<double>> data;
  for (const auto& row : rows) {
    std::vector<double> r(row.params.data(), row.params.data() + row.params.size());
    r.push_back(row.objective);
    data.push_back(std::move(r));
  }
  io::write_table_csv(path, "sweep", cols, data);
}

int cmd_frap_sweep(const std::string& template_name, const std::string& protocol_path,
                   const std::string& data_path, const std::string& grid_spec,
                   const std::string& out_path, int jobs,
                   const std::vector<std::string>& argv, const Timer& timer) {
  ModelTemplate tmpl = template_by_name(template_name);
  FrapProtocol protocol = io::load_protocol(protocol_path);
  RecoveryCurve data = io::read_recovery_csv(data_path);
  if (data.times.size() != protocol.times.size())
    throw Error("data and protocol observation times differ in length");
  auto grids = parse_sweep_grids(tmpl, grid_spec);
  auto rows = sweep(data, protocol, tmpl, grids, jobs);
  auto ranked = rows;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return a.objective < b.objective;
                   });
  write_sweep_csv(out_path, tmpl, ranked);
  emit_manifest("frap-sweep", argv, 0, {out_path}, timer.seconds(),
                out_path + ".manifest.json");
  std::cout << "rows = " << rows.size() << '\n';
  std::cout << "best_objective = " << format_double(ranked.front().objective) << '\n';
  std::cout << "best_params =";
  for (int k = 0; k < ranked.front().params.size(); ++k)
    std::cout << ' ' << tmpl.param_names[k] << '='
              << format_double(ranked.front().params(k));
  std::cout << '\n';
  return 0;
}

int cmd_frap_fit(const std::string& template_name, const std::string& protocol_path,
                 const std::string& data_path, const std::string& grid_spec,
                 int top_k, const std::string& out_prefix, int jobs,
                 const std::vector<std::string>& argv, const Timer& timer) {
  ModelTemplate tmpl = template_by_name(template_name);
  FrapProtocol protocol = io::load_protocol(protocol_path);
  RecoveryCurve data = io::read_recovery_csv(data_path);
  if (data.times.size() != protocol.times.size())
    throw Error("data and protocol observation times differ in length");
  auto grids = parse_sweep_grids(tmpl, grid_spec);
  auto rows = sweep(data, protocol, tmpl, grids, jobs);
  FitOptions opts;
  opts.top_k_starts = top_k;
  opts.workers = jobs;
  FitResult result = fit(data, protocol, tmpl, rows, opts);

  std::vector<std::string> artifacts;
  std::string sweep_path = out_prefix + "_sweep.csv";
  write_sweep_csv(sweep_path, tmpl, result.sweep_table);
  artifacts.push_back(sweep_path);

  std::cout << "objective = " << format_double(result.objective) << '\n';
  for (int k = 0; k < result.params.size(); ++k)
    std::cout << tmpl.param_names[k] << " = " << format_double(result.params(k))
              << '\n';
  std::cout << "converged = " << (result.converged ? "yes" : "no") << '\n';
  std::cout << "optima = " << result.optima.size() << '\n';
  for (size_t i = 0; i < result.optima.size(); ++i) {
    std::cout << "optimum " << i << ": objective = "
              << format_double(result.optima[i].objective) << ", params =";
    for (int k = 0; k < result.optima[i].params.size(); ++k)
      std::cout << ' ' << format_double(result.optima[i].params(k));
    std::cout << '\n';
  }
  if (!result.flat_params.empty()) {
    std::cout << "flat_valley =";
    for (const auto& name : result.flat_params) std::cout << ' ' << name;
    std::cout << '\n';
  }
  ModelSpec best = tmpl.make(result.params);
  DerivedQuantities dq = derived_quantities(best);
  print_effective(std::cout, dq.effective);
  for (const auto& rs : dq.runs)
    std::cout << "run[" << rs.label << "]: time = " << format_double(rs.run_time)
              << ", length = " << format_double(rs.run_length) << '\n';

  emit_manifest("frap-fit", argv, 0, artifacts, timer.seconds(),
                out_prefix + ".manifest.json");
  return 0;
}

int cmd_replay(const std::string& manifest_path) {
  RunManifest m = read_manifest(manifest_path);
  if (m.argv.empty()) throw Error("manifest has no argv to replay");
  return dispatch(m.argv);
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  Timer timer;
  CLI::App app{"effective transport of state-switching intracellular cargo"};
  app.require_subcommand(1);

  int jobs = default_workers();
  app.add_option("--jobs", jobs, "worker threads (default: CARGOFLOW_JOBS or hardware)")
      ->capture_default_str();

  std::string model_path, out_path, nu_range, sojourn_spec, csv_path;
  std::uint64_t seed = 0, cycles = 100000;
  int base_state = -1, bootstrap = 0;

  auto* eff = app.add_subcommand("effective", "spectral effective transport of a model");
  eff->add_option("--model", model_path, "model file")->required();

  auto* disp = app.add_subcommand("dispersion", "dispersion relation lambda(nu)");
  disp->add_option("--model", model_path, "model file")->required();
  disp->add_option("--nu-range", nu_range, "a:b:n linear range")->required();
  disp->add_option("--out", out_path, "output CSV (default: stdout)");

  auto* sim = app.add_subcommand("simulate", "renewal-reward Monte Carlo estimate");
  sim->add_option("--model", model_path, "model file")->required();
  sim->add_option("--cycles", cycles, "number of regeneration cycles");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--sojourn", sojourn_spec, "exp (default) or gamma:SHAPE");
  sim->add_option("--base-state", base_state, "regeneration state (default: max pi)");
  sim->add_option("--csv", csv_path, "write per-cycle CSV");
  sim->add_option("--bootstrap", bootstrap, "bootstrap replicates for errors");

  std::string kind, domain_spec, origin_spec, length_spec, raster_spec, field_prefix;
  int n_filaments = 100;
  double p_down = 1.0, kappa = 10.0;
  auto* net = app.add_subcommand("network", "generate a filament network");
  net->add_option("--kind", kind, "parallel|radial")->required();
  net->add_option("--domain", domain_spec, "x0,y0,x1,y1")->required();
  net->add_option("--n", n_filaments, "filament count");
  net->add_option("--p-down", p_down, "plus-end-down probability (parallel)");
  net->add_option("--origin", origin_spec, "x,y (radial)");
  net->add_option("--kappa", kappa, "angular concentration (radial)");
  net->add_option("--length", length_spec, "full|fixed:L|uniform:a,b");
  net->add_option("--seed", seed, "RNG seed");
  net->add_option("--out", out_path, "segments CSV")->required();
  net->add_option("--raster", raster_spec, "nx,ny to also emit field dumps");
  net->add_option("--field-out", field_prefix, "field dump prefix");

  std::string network_path, rho_path, grid_spec, init_spec, snap_spec, out_prefix;
  double t_end = 1.0, fixed_dt = 0.0;
  auto* pde = app.add_subcommand("pde", "finite-volume simulation");
  pde->add_option("--model", model_path, "model file")->required();
  pde->add_option("--network", network_path, "segments CSV (network advection)");
  pde->add_option("--rho", rho_path, "availability profile CSV (x in [0,1])");
  pde->add_option("--grid", grid_spec, "nx,ny")->required();
  pde->add_option("--domain", domain_spec, "x0,y0,x1,y1")->required();
  pde->add_option("--init", init_spec, "gaussian:cx=..,cy=..,sigma=.. | delta:.. | uniform")
      ->required();
  pde->add_option("--t-end", t_end, "end time")->required();
  pde->add_option("--snap", snap_spec, "comma-separated snapshot times");
  pde->add_option("--dt", fixed_dt, "fixed time step (default: auto)");
  pde->add_option("--out", out_prefix, "output prefix")->required();

  int grid_points = 401;
  auto* spat = app.add_subcommand("spatial-effective",
                                  "effective transport with x-varying availability");
  spat->add_option("--model", model_path, "model file")->required();
  spat->add_option("--rho", rho_path, "profile CSV (x, rho)")->required();
  spat->add_option("--grid-points", grid_points, "BVP grid points");

  std::string protocol_path, data_path, template_name = "two_state", grid_spec_frap;
  double noise = 0.0;
  int top_k = 5;
  auto* synth = app.add_subcommand("frap-synth", "synthesize a recovery curve");
  synth->add_option("--model", model_path, "model file")->required();
  synth->add_option("--protocol", protocol_path, "protocol file")->required();
  synth->add_option("--out", out_path, "recovery CSV")->required();
  synth->add_option("--noise", noise, "relative gaussian noise level");
  synth->add_option("--seed", seed, "noise RNG seed");

  auto* fsweep = app.add_subcommand("frap-sweep", "objective over a parameter grid");
  fsweep->add_option("--template", template_name, "two_state|reaction_diffusion");
  fsweep->add_option("--protocol", protocol_path, "protocol file")->required();
  fsweep->add_option("--data", data_path, "measured recovery CSV")->required();
  fsweep->add_option("--grid", grid_spec_frap, "d=lo:hi:n,c=...,beta1=...,beta2=...")
      ->required();
  fsweep->add_option("--out", out_path, "sweep CSV")->required();

  auto* ffit = app.add_subcommand("frap-fit", "sweep plus multi-start local descent");
  ffit->add_option("--template", template_name, "two_state|reaction_diffusion");
  ffit->add_option("--protocol", protocol_path, "protocol file")->required();
  ffit->add_option("--data", data_path, "measured recovery CSV")->required();
  ffit->add_option("--grid", grid_spec_frap, "sweep grid")->required();
  ffit->add_option("--top-k", top_k, "multi-start count");
  ffit->add_option("--out", out_prefix, "output prefix")->required();

  std::string manifest_path;
  auto* rep = app.add_subcommand("replay", "re-run a command from its manifest");
  rep->add_option("--manifest", manifest_path, "manifest JSON")->required();

  std::vector<std::string> argv_copy = args;
  try {
    // CLI11 parses argv-style (reversed, without program name)
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (eff->parsed()) return cmd_effective(model_path);
    if (disp->parsed())
      return cmd_dispersion(model_path, nu_range, out_path, argv_copy, timer);
    if (sim->parsed())
      return cmd_simulate(model_path, cycles, seed, sojourn_spec, base_state,
                          csv_path, bootstrap, jobs, argv_copy, timer);
    if (net->parsed())
      return cmd_network(kind, domain_spec, n_filaments, p_down, origin_spec,
                         kappa, length_spec, seed, out_path, raster_spec,
                         field_prefix, argv_copy, timer);
    if (pde->parsed())
      return cmd_pde(model_path, network_path, rho_path, grid_spec, domain_spec,
                     init_spec, t_end, snap_spec, fixed_dt, jobs, out_prefix,
                     argv_copy, timer);
    if (spat->parsed())
      return cmd_spatial_effective(model_path, rho_path, grid_points);
    if (synth->parsed())
      return cmd_frap_synth(model_path, protocol_path, out_path, noise, seed,
                            jobs, argv_copy, timer);
    if (fsweep->parsed())
      return cmd_frap_sweep(template_name, protocol_path, data_path,
                            grid_spec_frap, out_path, jobs, argv_copy, timer);
    if (ffit->parsed())
      return cmd_frap_fit(template_name, protocol_path, data_path, grid_spec_frap,
                          top_k, out_prefix, jobs, argv_copy, timer);
    if (rep->parsed()) return cmd_replay(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace cargoflow
