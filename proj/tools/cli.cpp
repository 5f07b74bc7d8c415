#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dmera/io.hpp"
#include "dmera/mitigation.hpp"

#ifndef DMERA_DATA_DIR
#define DMERA_DATA_DIR "data"
#endif

namespace dmera::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_output_dir() {
  const char* env = std::getenv("DMERA_OUTPUT_DIR");
  return env && *env ? env : "dmera-out";
}

std::string RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["angles"] = angles;
  j["depth"] = depth;
  j["variant"] = variant;
  j["noise"] = noise;
  j["kind"] = kind;
  j["grid"] = grid;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["out_dir"] = out_dir;
  j["layers"] = layers;
  j["top"] = top;
  j["n_out"] = n_out;
  j["post_layers"] = post_layers;
  j["starts"] = starts;
  j["tol"] = tol;
  j["samples"] = samples;
  j["depths"] = depths;
  j["initial"] = initial;
  j["l_max"] = l_max;
  j["trajectories"] = trajectories;
  j["ells"] = ells;
  j["scheme"] = scheme;
  j["repetitions"] = repetitions;
  j["data"] = data;
  j["observables"] = observables;
  return j.dump(2);
}

namespace {

bool is_stochastic(const std::string& command) {
  return command == "calibrate" || command == "ensemble" || command == "dilution";
}

void check(const RunConfig& c) {
  if (c.depth < 2 || c.depth > 4) throw UsageError("--depth must be 2, 3 or 4");
  try {
    parse_variant(c.variant);
    parse_channel_kind(c.kind);
    parse_initial(c.initial);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  try {
    parse_noise(c.noise);
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    if (msg.find(kNoiseGrammar) == std::string::npos) msg += "\n  --noise grammar: " + std::string(kNoiseGrammar);
    throw UsageError(msg);
  }
  if (c.scheme != "all") {
    try {
      parse_zne_scheme(c.scheme);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (c.angles != "auto" && c.angles != "calibrate" && !fs::exists(c.angles))
    throw UsageError("angle file '" + c.angles + "' does not exist");
  if (c.command == "fit-noise") {
    if (c.data.empty()) throw UsageError("fit-noise needs --data <measured.csv>");
    if (!fs::exists(c.data)) throw UsageError("data file '" + c.data + "' does not exist");
  }
  for (const auto& o : c.observables)
    if (!is_known_observable(o)) throw UsageError("unknown observable '" + o + "' (expected X|Z|ZZ|ZXZ|energy)");
  if (c.layers < 0 || c.post_layers < 0) throw UsageError("layer counts must be >= 0");
  if (c.top < 1) throw UsageError("--top must be >= 1");
  if (c.repetitions < 3 || c.repetitions % 2 == 0) throw UsageError("--repetitions must be odd and >= 3");
  if (c.depths.empty() || c.ells.empty()) throw UsageError("grids must be nonempty");
  if (is_stochastic(c.command) && !c.seed) throw UsageError(c.command + " needs --seed");
}

}  // namespace

RunConfig parse_args(int argc, const char* const* argv, bool* help_exit, std::ostream* help_out) {
  RunConfig c;
  c.out_dir = default_output_dir();
  CLI::App app{"DMERA causal-cone channel experiments", "dmera"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::uint64_t seed = 0;
  auto common = [&](CLI::App* s, bool stochastic) {
    s->add_option("--depth,-D", c.depth, "Layer depth D (2, 3 or 4)");
    s->add_option("--variant", c.variant, "Native decomposition C1|C2");
    s->add_option("--angles", c.angles, "Angle file, 'calibrate', or 'auto' (bundled or cached angles)");
    s->add_option("--noise", c.noise, std::string("Noise spec: ") + kNoiseGrammar);
    s->add_option("--kind", c.kind, "Channel left|right|mixture");
    s->add_option("--out,-o", c.out_dir, "Output directory (default $DMERA_OUTPUT_DIR or ./dmera-out)");
    auto* so = s->add_option("--seed", seed, "Random seed");
    if (stochastic) so->default_val(1);
  };
  auto grid_opt = [&](CLI::App* s, const char* help) { s->add_option("--grid", c.grid, help)->delimiter(','); };

  auto* cal = app.add_subcommand("calibrate", "Calibrate layer angles and cache them");
  common(cal, true);
  cal->add_option("--starts", c.starts, "Nelder-Mead starts");
  cal->add_option("--tol", c.tol, "Target tolerance (default: table tolerance)");

  auto* fp = app.add_subcommand("fixed-point", "Fixed point and its local observables");
  common(fp, false);

  auto* sp = app.add_subcommand("spectrum", "Leading channel eigenvalues and scaling dimensions");
  common(sp, false);
  sp->add_option("--top", c.top, "Number of eigenvalues");

  auto* dyn = app.add_subcommand("dynamics", "Observables over repeated channel layers");
  common(dyn, false);
  dyn->add_option("--initial", c.initial, "Initial product state psi1|psi2");
  dyn->add_option("--layers", c.layers, "Number of layers");

  auto* nr = app.add_subcommand("noise-response", "Recovery after one noisy layer");
  common(nr, false);
  grid_opt(nr, "sigma2 values");
  nr->add_option("--post-layers", c.post_layers, "Noiseless layers after the noisy one");

  auto* sw = app.add_subcommand("sweep", "Fixed-point energy versus noise strength");
  common(sw, false);
  grid_opt(sw, "Noise strengths (the family comes from --noise)");

  auto* ens = app.add_subcommand("ensemble", "Mean susceptibility over random low-energy angle sets");
  common(ens, true);
  ens->add_option("--depths", c.depths, "Depths")->delimiter(',');
  ens->add_option("--samples", c.samples, "Accepted angle sets per depth");
  grid_opt(ens, "Noise strengths for the slope fit");

  auto* dil = app.add_subcommand("dilution", "Fidelity dilution over noiseless growth layers");
  common(dil, true);
  grid_opt(dil, "sigma2 of the noisy first layer (first value used)");
  dil->add_option("--lmax", c.l_max, "Final system size");
  dil->add_option("--trajectories", c.trajectories, "Noise trajectories");
  dil->add_option("--ell", c.ells, "Subsystem sizes")->delimiter(',');

  auto* zne = app.add_subcommand("zne", "Zero-noise extrapolation");
  common(zne, false);
  double sigma2 = -1.0;
  zne->add_option("--sigma2", sigma2, "Angle-imprecision variance (shorthand for --grid with one value)");
  grid_opt(zne, "sigma2 values");
  zne->add_option("--scheme", c.scheme, "linear|geom-additive|geom-multiplicative|all");
  zne->add_option("--repetitions", c.repetitions, "Gate repetition factor (odd)");

  auto* fit = app.add_subcommand("fit-noise", "Fit sigma2 to measured layer data");
  common(fit, false);
  fit->add_option("--data", c.data, "CSV with layer,observable,mean,n_samples");
  fit->add_option("--initial", c.initial, "Initial state of the measured runs");
  fit->add_option("--observables", c.observables, "Observables entering the residual")->delimiter(',');
  grid_opt(fit, "sigma2 grid");

  auto* gc = app.add_subcommand("gate-count", "Native gate and reset counts");
  common(gc, false);
  gc->add_option("--layers", c.layers, "Number of layers");
  gc->add_option("--n-out", c.n_out, "Output window (default: channel width)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    if (help_exit) *help_exit = true;
    if (help_out) *help_out << app.help();
    return c;
  } catch (const CLI::CallForAllHelp& e) {
    if (help_exit) *help_exit = true;
    if (help_out) *help_out << app.help("", CLI::AppFormatMode::All);
    return c;
  } catch (const CLI::CallForVersion& e) {
    if (help_exit) *help_exit = true;
    if (help_out) *help_out << kToolVersion << "\n";
    return c;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (auto* s : app.get_subcommands()) {
    c.command = s->get_name();
    if (s->count("--seed") > 0 || is_stochastic(c.command)) c.seed = seed;
  }
  if (sigma2 >= 0.0) c.grid.insert(c.grid.begin(), sigma2);
  check(c);
  return c;
}

// ---- dispatch ---------------------------------------------------------------

namespace {

std::string data_dir() {
  const char* env = std::getenv("DMERA_DATA_DIR");
  return env && *env ? env : DMERA_DATA_DIR;
}

std::string bundled_name(int depth) { return "D" + std::to_string(depth) + ".json"; }

AngleProfile calibrate_and_cache(const RunConfig& c, std::ostream& out) {
  CalibrationOptions opt;
  opt.starts = c.starts;
  opt.seed = *c.seed;
  opt.kind = parse_channel_kind(c.kind);
  const double tol = c.tol > 0 ? c.tol : (c.depth == 4 ? 1e-3 : 1e-4);
  const CalibrationResult r = calibrate_angles(c.depth, parse_variant(c.variant), tol, opt);
  const fs::path cache = fs::path(c.out_dir) / "angles";
  const std::string text = r.profile.to_json() + "\n";
  write_text_atomic((cache / (profile_digest(r.profile) + ".json")).string(), text);
  write_text_atomic((cache / bundled_name(c.depth)).string(), text);
  out << "calibrated D=" << c.depth << " E=" << format_double(r.energy) << " delta_sigma=" << format_double(r.delta_sigma)
      << " delta_epsilon=" << format_double(r.delta_epsilon) << "\n";
  return r.profile;
}

AngleProfile resolve_profile(const RunConfig& c, std::ostream& out, std::string* source) {
  AngleProfile p;
  if (c.angles == "calibrate") {
    RunConfig cc = c;
    if (!cc.seed) cc.seed = 1;
    p = calibrate_and_cache(cc, out);
    *source = "calibrate";
  } else if (c.angles != "auto") {
    p = AngleProfile::load(c.angles);
    *source = c.angles;
  } else {
    const fs::path cached = fs::path(c.out_dir) / "angles" / bundled_name(c.depth);
    const fs::path bundled = fs::path(data_dir()) / "angles" / bundled_name(c.depth);
    const fs::path pick = fs::exists(cached) ? cached : bundled;
    if (!fs::exists(pick))
      throw UsageError("no angles for depth " + std::to_string(c.depth) + " (looked in " + cached.string() + " and " +
                       bundled.string() + "); run `calibrate` or pass --angles");
    p = AngleProfile::load(pick.string());
    *source = pick.string();
  }
  if (p.depth != c.depth)
    throw UsageError("angle file has depth " + std::to_string(p.depth) + ", --depth is " + std::to_string(c.depth));
  p.variant = parse_variant(c.variant);
  return p;
}

double first_or(const std::vector<double>& grid, double fallback) { return grid.empty() ? fallback : grid.front(); }

struct Output {
  std::string name;
  CsvTable table;
};

void write_sidecar(const RunConfig& c, const std::string& stem, const std::optional<AngleProfile>& profile,
                   const std::string& source, double seconds) {
  json j;
  j["tool"] = "dmera";
  j["version"] = kToolVersion;
  j["config"] = json::parse(c.to_json());
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["wall_seconds"] = seconds;
  if (profile) {
    j["angle_profile"] = json::parse(profile->to_json());
    j["angle_digest"] = profile_digest(*profile);
    j["angle_source"] = source;
  }
  write_text_atomic((fs::path(c.out_dir) / (stem + ".meta.json")).string(), j.dump(2) + "\n");
}

std::vector<Output> run(const RunConfig& c, std::ostream& out, std::optional<AngleProfile>& profile,
                        std::string& source) {
  const NoiseModel noise = parse_noise(c.noise);
  const ChannelKind kind = parse_channel_kind(c.kind);
  std::vector<Output> outputs;

  if (c.command == "gate-count") {
    AngleProfile p;
    p.depth = c.depth;
    p.thetas.assign(c.depth, 0.0);
    p.variant = parse_variant(c.variant);
    const int n_out = c.n_out > 0 ? c.n_out : channel_width(c.depth);
    const GateCounts g = gate_counts(p, n_out, c.layers);
    out << g.ms_gates << "/" << g.single_qubit_gates << "/" << g.resets << "\n";
    CsvTable t{{"depth", "variant", "n_out", "layers", "ms_gates", "single_qubit_gates", "resets"}, {}};
    t.add({static_cast<long long>(c.depth), c.variant, static_cast<long long>(n_out),
           static_cast<long long>(c.layers), static_cast<long long>(g.ms_gates),
           static_cast<long long>(g.single_qubit_gates), static_cast<long long>(g.resets)});
    outputs.push_back({"gate_count", t});
    return outputs;
  }

  if (c.command == "calibrate") {
    profile = calibrate_and_cache(c, out);
    source = "calibrate";
    CsvTable t{{"depth", "variant", "theta_index", "theta"}, {}};
    for (std::size_t i = 0; i < profile->thetas.size(); ++i)
      t.add({static_cast<long long>(c.depth), c.variant, static_cast<long long>(i), profile->thetas[i]});
    outputs.push_back({"calibrate", t});
    return outputs;
  }

  if (c.command == "ensemble") {
    std::vector<EnsembleResult> results;
    for (int d : c.depths) {
      EnsembleSpec spec;
      spec.depth = d;
      spec.variant = parse_variant(c.variant);
      spec.samples = c.samples;
      spec.seed = *c.seed;
      if (!c.grid.empty()) spec.epsilon_grid = c.grid;
      const NoiseModel family = is_noiseless(noise) ? NoiseModel{AngleImprecision{}} : noise;
      results.push_back(depth_ensemble(spec, family));
      out << "D=" << d << " mean_slope=" << format_double(results.back().mean_slope) << "\n";
    }
    outputs.push_back({"ensemble", ensemble_table(results)});
    return outputs;
  }

  profile = resolve_profile(c, out, &source);
  const AngleProfile& p = *profile;

  if (c.command == "fixed-point") {
    const ProfileEvaluation ev = evaluate_energy(p, noise, kind);
    CsvTable t{{"observable", "value"}, {}};
    for (const char* o : {"X", "Z", "ZZ", "ZXZ", "energy"})
      t.add({std::string(o), named_observable(ev.fixed.state.matrix(), o)});
    out << "energy " << format_double(ev.energy) << "\n";
    outputs.push_back({"fixed_point", t});
  } else if (c.command == "spectrum") {
    const Channel ch = layer_channel(p, kind, ChannelOptions{noise, 1});
    const Spectrum s = spectrum_topk(ch, c.top);
    outputs.push_back({"spectrum", spectrum_table(s)});
  } else if (c.command == "dynamics") {
    DynamicsSpec spec;
    spec.noise = noise;
    spec.initial = parse_initial(c.initial);
    spec.n_layers = c.layers;
    spec.kind = kind;
    if (!c.observables.empty()) spec.observables = c.observables;
    outputs.push_back({"dynamics", dynamics_table(run_dynamics(p, spec))});
  } else if (c.command == "noise-response") {
    const std::vector<double> grid = c.grid.empty() ? std::vector<double>{1e-3, 1e-2, 1e-1} : c.grid;
    CsvTable t{{"sigma2", "layer", "excess", "delta_fit"}, {}};
    for (double s2 : grid) {
      const NoiseResponse r = noise_response(p, s2, c.post_layers, kind);
      for (std::size_t k = 0; k < r.excess.size(); ++k)
        t.add({s2, static_cast<long long>(k), r.excess[k], r.delta_fit});
      out << "sigma2=" << format_double(s2) << " delta=" << format_double(r.delta_fit) << "\n";
    }
    outputs.push_back({"noise_response", t});
  } else if (c.command == "sweep") {
    const std::vector<double> grid =
        c.grid.empty() ? std::vector<double>{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1} : c.grid;
    const NoiseModel family = is_noiseless(noise) ? NoiseModel{AngleImprecision{}} : noise;
    const SweepResult r = susceptibility_sweep(p, family, grid, kind);
    out << "slope " << format_double(r.slope) << "\n";
    outputs.push_back({"sweep", sweep_table(r)});
  } else if (c.command == "dilution") {
    DilutionSpec spec;
    spec.sigma2 = first_or(c.grid, 1e-2);
    spec.l_max = c.l_max;
    spec.n_trajectories = c.trajectories;
    spec.subsystem_sizes = c.ells;
    spec.seed = *c.seed;
    outputs.push_back({"dilution", dilution_table(dilution_study(p, spec))});
  } else if (c.command == "zne") {
    const std::vector<double> grid = c.grid.empty() ? std::vector<double>{1e-3} : c.grid;
    CsvTable t{{"scheme", "sigma2", "E0", "E_last", "E_secondlast", "E_star_hat", "eps_hat", "lambda_hat", "accepted"},
               {}};
    for (double s2 : grid) {
      const ZneMeasurements m = zne_measurements(p, AngleImprecision{s2}, c.repetitions, kind);
      for (const ZneResult& r : zne_all(m, c.repetitions)) {
        if (c.scheme != "all" && r.scheme != parse_zne_scheme(c.scheme)) continue;
        t.add({to_string(r.scheme), s2, r.e0, r.e_last, r.e_second_last, r.e_star_hat, r.eps_hat, r.lambda_hat,
               r.accepted});
        if (!r.warning.empty()) out << "warning: " << r.warning << "\n";
      }
    }
    outputs.push_back({"zne", t});
  } else if (c.command == "fit-noise") {
    std::vector<double> grid = c.grid;
    if (grid.empty())
      for (int i = 0; i <= 40; ++i) grid.push_back(0.005 * i);
    const FitResult r = fit_sigma2(read_measurements(c.data), p, grid, parse_initial(c.initial), c.observables);
    out << "sigma2 " << format_double(r.sigma2) << " residual " << format_double(r.residual) << "\n";
    outputs.push_back({"fit", fit_table(r)});
  } else {
    throw UsageError("unknown command '" + c.command + "'");
  }
  return outputs;
}

}  // namespace

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<AngleProfile> profile;
  std::string source;
  std::vector<Output> outputs;
  try {
    outputs = run(c, out, profile, source);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<std::string> written;
  try {
    for (const auto& o : outputs) {
      const std::string path = (fs::path(c.out_dir) / (o.name + ".csv")).string();
      write_csv(o.table, path);
      written.push_back(path);
      write_sidecar(c, o.name, profile, source, seconds);
      written.push_back((fs::path(c.out_dir) / (o.name + ".meta.json")).string());
      out << "wrote " << path << "\n";
    }
  } catch (const std::exception& e) {
    for (const auto& w : written) fs::remove(w);
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dmera::cli
