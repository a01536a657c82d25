#include "qtree/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "CLI11.hpp"
#include "qtree/ensemble.hpp"
#include "qtree/error.hpp"
#include "qtree/observables.hpp"
#include "qtree/parallel.hpp"
#include "qtree/regular.hpp"

namespace qtree {

namespace {

const std::vector<std::string> kCommands = {"bands",     "fixed-point", "density",  "lyapunov",
                                            "fluctuation", "stability", "recursion"};

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ValidationError("n_points must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  }
  return v;
}

std::vector<double> doubles(const json& arr, const char* key) {
  std::vector<double> v;
  for (const auto& x : arr) {
    if (!x.is_number()) throw ValidationError(std::string("config: ") + key + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

std::size_t count(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ValidationError(std::string("config: ") + key + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

SamplerOptions sampler_from(const json& sec, int threads) {
  SamplerOptions o;
  const std::string kind = sec.at("sampler").get<std::string>();
  if (kind == "pool") {
    o.kind = SamplerOptions::Kind::pool;
  } else if (kind == "direct") {
    o.kind = SamplerOptions::Kind::direct;
  } else {
    throw ValidationError("config: sampler must be 'pool' or 'direct'");
  }
  o.pool_size = count(sec.at("pool_size"), "pool_size");
  o.burn_in = static_cast<int>(count(sec.at("burn_in"), "burn_in"));
  o.batches = static_cast<int>(count(sec.at("batches"), "batches"));
  o.thinning = static_cast<int>(count(sec.at("thinning"), "thinning"));
  o.threads = threads;
  return o;
}

std::int64_t flag(bool b) { return b ? 1 : 0; }

Table bands_table(const RunConfig& rc) {
  const json& sec = rc.section("bands");
  const BandList bl = ac_bands(rc.tree.K, rc.tree.L, static_cast<int>(count(sec.at("n_max"), "n_max")));
  Table t{{"n", "a_n", "b_n"}, {}};
  for (std::size_t n = 0; n < bl.intervals.size(); ++n) {
    t.rows.push_back({static_cast<std::int64_t>(n), bl.intervals[n].a, bl.intervals[n].b});
  }
  return t;
}

Table fixed_point_table(const RunConfig& rc) {
  const json& sec = rc.section("fixed-point");
  const double eta = sec.at("eta").get<double>();
  const auto grid = linspace(sec.at("E_min").get<double>(), sec.at("E_max").get<double>(),
                             static_cast<int>(count(sec.at("n_points"), "n_points")));
  Table t{{"E", "eta", "Re_Phi", "Im_Phi", "residual", "abs_m", "gamma0", "near_band_edge",
           "status"},
          {}};
  for (double E : grid) {
    try {
      const HalfPlanePoint z{E, eta};
      const FixedPoint fp = fixed_point_R(z, rc.tree.K, rc.tree.L, rc.tree.vertex_bc);
      const double g = gamma_clean(z, rc.tree.K, rc.tree.L, rc.tree.vertex_bc);
      t.rows.push_back({E, eta, fp.phi.real(), fp.phi.imag(), fp.residual, fp.abs_m, g,
                        flag(fp.near_band_edge), std::string("ok")});
    } catch (const Error& e) {
      t.rows.push_back({E, eta, NAN, NAN, NAN, NAN, NAN, std::int64_t{0}, std::string(e.what())});
    }
  }
  return t;
}

Table density_table(const RunConfig& rc, int threads) {
  const json& sec = rc.section("density");
  const auto grid = linspace(sec.at("E_min").get<double>(), sec.at("E_max").get<double>(),
                             static_cast<int>(count(sec.at("n_points"), "n_points")));
  DensityOptions o;
  const std::string loc = sec.at("location").get<std::string>();
  if (loc == "root") {
    o.location = DensityLocation::root;
  } else if (loc == "interior") {
    o.location = DensityLocation::interior;
    std::vector<int> path;
    for (const auto& x : sec.at("target")) {
      if (!x.is_number_integer()) throw ValidationError("config: density.target must hold integers");
      path.push_back(x.get<int>());
    }
    o.target = EdgeAddress(path);
    o.position = sec.at("position").get<double>();
  } else {
    throw ValidationError("config: density.location must be 'root' or 'interior'");
  }
  if (sec.at("extrapolate").get<bool>()) o.ladder = doubles(sec.at("ladder"), "density.ladder");
  o.solve.visit_budget = rc.visit_budget;
  o.threads = threads;
  const auto pts = spectral_density(rc.tree, rc.disorder, grid, sec.at("eta").get<double>(),
                                    count(sec.at("replica"), "replica"), o);
  Table t{{"E", "eta", "rho", "Im_R", "abs_r", "status"}, {}};
  for (const auto& p : pts) {
    if (p.ok()) {
      t.rows.push_back({p.E, p.eta, p.rho, p.R_plus.imag(), p.abs_r, p.status});
    } else {
      t.rows.push_back({p.E, p.eta, NAN, NAN, NAN, p.status});
    }
  }
  return t;
}

Table lyapunov_table(const RunConfig& rc, int threads) {
  const json& sec = rc.section("lyapunov");
  const double E = sec.at("E").get<double>();
  const std::size_t n = count(sec.at("n"), "n");
  const SamplerOptions so = sampler_from(sec, threads);
  Table t{{"lambda", "eta", "E", "gamma_hat", "stderr", "n", "gamma_clean", "status"}, {}};
  for (double lambda : doubles(sec.at("lambdas"), "lyapunov.lambdas")) {
    for (double eta : doubles(sec.at("etas"), "lyapunov.etas")) {
      DisorderModel dm = rc.disorder;
      dm.lambda = lambda;
      const HalfPlanePoint z{E, eta};
      try {
        dm.validate();
        const LyapunovEstimate est = estimate_gamma(rc.tree, dm, z, n, so);
        const double g0 = gamma_clean(z, rc.tree.K, rc.tree.L, rc.tree.vertex_bc);
        t.rows.push_back({lambda, eta, E, est.gamma_hat, est.std_error,
                          static_cast<std::int64_t>(est.n), g0, std::string("ok")});
      } catch (const Error& e) {
        t.rows.push_back({lambda, eta, E, NAN, NAN, std::int64_t{0}, NAN, std::string(e.what())});
      }
    }
  }
  return t;
}

Table fluctuation_table(const RunConfig& rc, int threads) {
  const json& sec = rc.section("fluctuation");
  const double E = sec.at("E").get<double>();
  const double eta = sec.at("eta").get<double>();
  const double a = sec.at("a").get<double>();
  const std::size_t n = count(sec.at("n"), "n");
  const SamplerOptions so = sampler_from(sec, threads);
  Table t{{"lambda", "eta", "E", "a", "n", "gamma_hat", "stderr", "delta_im", "delta_mod",
           "bound1_rhs", "bound2_rhs", "bound1_ok", "bound2_ok", "status"},
          {}};
  for (double lambda : doubles(sec.at("lambdas"), "fluctuation.lambdas")) {
    DisorderModel dm = rc.disorder;
    dm.lambda = lambda;
    try {
      dm.validate();
      const FluctuationReport r = fluctuation_report(rc.tree, dm, {E, eta}, a, n, so);
      t.rows.push_back({lambda, eta, E, a, static_cast<std::int64_t>(r.n), r.gamma_hat,
                        r.gamma_stderr, r.delta_im, r.delta_mod, r.bound1_rhs, r.bound2_rhs,
                        flag(r.bound1_ok), flag(r.bound2_ok), std::string("ok")});
    } catch (const Error& e) {
      t.rows.push_back({lambda, eta, E, a, std::int64_t{0}, NAN, NAN, NAN, NAN, NAN, NAN,
                        std::int64_t{0}, std::int64_t{0}, std::string(e.what())});
    }
  }
  return t;
}

Table stability_table(const RunConfig& rc, int threads) {
  const json& sec = rc.section("stability");
  StabilityOptions o;
  o.n_energies = count(sec.at("n_energies"), "n_energies");
  o.burn_in = static_cast<int>(count(sec.at("burn_in"), "burn_in"));
  o.threads = threads;
  const auto rows = stability_scan(
      rc.tree, rc.disorder, doubles(sec.at("lambdas"), "stability.lambdas"),
      doubles(sec.at("etas"), "stability.etas"), sec.at("E_min").get<double>(),
      sec.at("E_max").get<double>(), sec.at("eps").get<double>(), count(sec.at("n"), "n"), o);
  Table t{{"lambda", "eta", "eps", "exceedance", "stderr", "n"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.lambda, r.eta, r.eps, r.exceedance, r.std_error,
                      static_cast<std::int64_t>(r.n)});
  }
  return t;
}

Table recursion_table(const RunConfig& rc, int threads) {
  const json& sec = rc.section("recursion");
  const HalfPlanePoint z{sec.at("E").get<double>(), sec.at("eta").get<double>()};
  const auto samples =
      sample_edges(rc.tree, rc.disorder, z, count(sec.at("n"), "n"), sampler_from(sec, threads));
  Table t{{"index", "L_e", "Re_R", "Im_R", "abs_m"}, {}};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    t.rows.push_back({static_cast<std::int64_t>(i), s.length, s.R_near.real(), s.R_near.imag(),
                      std::abs(m_from_r({s.R_near}, z).m)});
  }
  return t;
}

}  // namespace

Table compute_command(const std::string& command, const RunConfig& rc, int threads) {
  if (command == "bands") return bands_table(rc);
  if (command == "fixed-point") return fixed_point_table(rc);
  if (command == "density") return density_table(rc, threads);
  if (command == "lyapunov") return lyapunov_table(rc, threads);
  if (command == "fluctuation") return fluctuation_table(rc, threads);
  if (command == "stability") return stability_table(rc, threads);
  if (command == "recursion") return recursion_table(rc, threads);
  throw ValidationError("unknown command '" + command + "'");
}

void run_command(const std::string& command, const RunConfig& rc, const std::string& out_dir,
                 int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const Table table = compute_command(command, rc, threads);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + out_dir + "'");
  const std::filesystem::path dir(out_dir);
  std::vector<std::string> outputs;
  const std::string csv = (dir / (command + ".csv")).string();
  write_text(csv, to_csv(table));
  outputs.push_back(csv);

  std::optional<PlotKind> kind;
  if (command == "density") kind = PlotKind::density;
  if (command == "lyapunov") kind = PlotKind::gamma_vs_eta;
  if (command == "stability") kind = PlotKind::exceedance_vs_lambda;
  if (kind && !table.rows.empty()) {
    const std::string svg = (dir / (command + ".svg")).string();
    emit_plotdata(table, *kind, svg);
    outputs.push_back(svg);
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest{
      {"manifest_version", 1},
      {"command", command},
      {"config", rc.doc},
      {"seed", rc.disorder.master_seed},
      {"threads", threads},
      {"versions",
       {{"qtree", kVersion},
        {"compiler", __VERSION__},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"cli11", CLI11_VERSION}}},
      {"wall_time_s", wall},
      {"outputs", outputs},
  };
  write_text((dir / (command + ".manifest.json")).string(), manifest.dump(2) + "\n");
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 2;
  return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weyl-Titchmarsh functions on random metric trees", "qtree"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::optional<std::string> config_path;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<int> K;
  std::optional<double> L;
  std::optional<int> depth;
  std::optional<int> n_max;

  app.add_option("--config", config_path, "JSON config file or run manifest");
  app.add_option("--set", sets, "Override, key.path=value (repeatable)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads (default: QTREE_THREADS or 1)");
  app.add_option("--seed", seed, "disorder.master_seed");
  app.add_option("--K", K, "Branching number");
  app.add_option("--L", L, "Base edge length");
  app.add_option("--depth", depth, "Truncation depth");
  app.add_option("--n-max", n_max, "Last band index (bands)");

  std::string command;
  for (const std::string& name : kCommands) {
    app.add_subcommand(name, "")->fallthrough()->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (K) sets.push_back("K=" + std::to_string(*K));
    if (L) sets.push_back("L=" + format_double(*L));
    if (depth) sets.push_back("depth=" + std::to_string(*depth));
    if (n_max) sets.push_back("bands.n_max=" + std::to_string(*n_max));
    if (seed) sets.push_back("disorder.master_seed=" + std::to_string(*seed));
    const RunConfig rc = load_config(config_path, sets);
    const int nthreads = threads ? *threads : default_thread_count();
    if (nthreads < 1) throw ValidationError("--threads must be >= 1");
    run_command(command, rc, out_dir, nthreads);
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code(e);
    err << (code == 2 ? "numerical error: " : "error: ") << e.what() << "\n";
    return code;
  }
}

}  // namespace qtree
