// Runs every primary acceptance criterion and prints one line per criterion.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "dmera/io.hpp"
#include "dmera/mitigation.hpp"

using namespace dmera;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

AngleProfile angles(int depth, Variant v = Variant::C1) {
  AngleProfile p = AngleProfile::load(std::string(DMERA_DATA_DIR) + "/angles/D" + std::to_string(depth) + ".json");
  p.variant = v;
  return p;
}

Outcome table_energies() {
  Outcome o;
  CalibrationOptions opt;
  opt.starts = 4;
  const CalibrationResult cal = calibrate_angles(2, Variant::C1, 1e-4, opt);
  o.require(std::abs(cal.energy - -1.23948) <= 1e-4, "D=2 calibrated now E=" + fmt(cal.energy, 8));
  const double e2 = evaluate_energy(angles(2)).energy;
  o.require(std::abs(e2 - -1.23948) <= 1e-4, "D=2 stored angles E=" + fmt(e2, 8));
  const double e4 = evaluate_energy(angles(4)).energy;
  o.require(std::abs(e4 - -1.26757) <= 1e-3, "D=4 stored angles E=" + fmt(e4, 8));
  return o;
}

Outcome table_dimensions() {
  Outcome o;
  const Channel c2 = layer_channel(angles(2));
  const Spectrum sp = spectrum_topk(c2, 8);
  o.require(std::abs(sp.pairs[0].lambda - 1.0) < 1e-9, "D=2 |l1-1|=" + fmt(std::abs(sp.pairs[0].lambda - 1.0), 3));
  const PrimaryDimensions d2 = primary_dimensions(sp, 3);
  o.require(std::abs(d2.delta_sigma - 0.136) <= 0.005, "D=2 dsigma=" + fmt(d2.delta_sigma));
  o.require(std::abs(d2.delta_epsilon - 1.0) <= 1e-3, "D=2 deps=" + fmt(d2.delta_epsilon, 8));
  const PrimaryDimensions d4 = primary_dimensions(layer_channel(angles(4)));
  o.require(std::abs(d4.delta_sigma - 0.123) <= 0.005, "D=4 dsigma=" + fmt(d4.delta_sigma));
  return o;
}

Outcome cptp_suite() {
  Outcome o;
  std::vector<NoiseModel> models{Noiseless{}};
  for (double s : {1e-4, 1e-3, 1e-2}) models.push_back(AngleImprecision{s});
  for (double p : {1e-4, 1e-3, 1e-2}) models.push_back(Depolarizing{p});
  double tp = 0.0, choi = 1.0, lam = 0.0;
  int count = 0;
  for (Variant v : {Variant::C1, Variant::C2}) {
    for (const auto& noise : models) {
      for (ChannelKind k : {ChannelKind::Left, ChannelKind::Right, ChannelKind::Mixture}) {
        const CptpReport r = verify_cptp(layer_channel(angles(2, v), k, ChannelOptions{noise, 1}).superoperator());
        tp = std::max(tp, r.tp_residual);
        choi = std::min(choi, r.choi_min_eigenvalue);
        lam = std::max(lam, r.max_abs_eigenvalue);
        ++count;
      }
    }
  }
  o.require(tp < 1e-10, std::to_string(count) + " channels, max TP residual " + fmt(tp, 3));
  o.require(choi >= -1e-10, "min Choi eigenvalue " + fmt(choi, 3));
  o.require(lam <= 1 + 1e-10, "max |lambda| " + fmt(lam, 15));
  return o;
}

Outcome decomposition_equivalence() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    AngleProfile p;
    p.depth = 2;
    p.thetas = {u(rng), u(rng)};
    const Matrix a = layer_channel(p).superoperator().matrix;
    p.variant = Variant::C2;
    const Matrix b = layer_channel(p).superoperator().matrix;
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  o.require(worst < 1e-10, "20 profiles, max deviation " + fmt(worst, 3));
  return o;
}

Outcome noise_response_exponent() {
  Outcome o;
  for (double s2 : {1e-3, 1e-2, 1e-1}) {
    const NoiseResponse r = noise_response(angles(2), s2, 10);
    o.require(std::abs(r.delta_fit - 1.89) <= 0.1, "sigma2=" + fmt(s2, 2) + " Delta=" + fmt(r.delta_fit, 4));
  }
  return o;
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy * sxy / (sxx * syy);
}

Outcome susceptibility_ordering() {
  Outcome o;
  const std::vector<double> grid{1e-4, 5e-4, 1e-3};
  auto slope = [&](int d, Variant v) { return susceptibility_sweep(angles(d, v), AngleImprecision{}, grid).slope; };
  const double c1d2 = slope(2, Variant::C1), c2d2 = slope(2, Variant::C2);
  const double c1d3 = slope(3, Variant::C1), c1d4 = slope(4, Variant::C1);
  o.require(c1d2 < c2d2, "slope C1 D2=" + fmt(c1d2, 4) + " < C2 D2=" + fmt(c2d2, 4));
  o.require(c1d4 < c1d3, "slope C1 D4=" + fmt(c1d4, 4) + " < C1 D3=" + fmt(c1d3, 4));
  std::vector<double> ds, means;
  std::string line;
  for (int d : {2, 3, 4}) {
    EnsembleSpec spec;
    spec.depth = d;
    spec.variant = Variant::C2;
    spec.samples = 8;
    spec.seed = 17;
    const EnsembleResult r = depth_ensemble(spec, AngleImprecision{});
    ds.push_back(d);
    means.push_back(r.mean_slope);
    line += " D" + std::to_string(d) + "=" + fmt(r.mean_slope, 4) + "+-" + fmt(r.stderr_slope, 2);
  }
  o.require(means[0] < means[1] && means[1] < means[2], "C2 ensemble means" + line);
  const double r2 = r_squared(ds, means);
  o.require(r2 > 0.9, "linear fit R2=" + fmt(r2, 4));
  return o;
}

Outcome zero_noise_extrapolation() {
  Outcome o;
  // solver round trip on model data
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e(-1.3, -1.0), eps(1e-6, 1e-2), lam(0.05, 0.95);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double star = e(rng), ep = eps(rng), l = lam(rng), c = 3.0;
    const double e0 = star + ep / (1 - l);
    const auto r = zne_geometric(e0, e0 + (c - 1) * ep, e0 + (c - 1) * ep * l, c, ZneScheme::GeomAdditive);
    const double a0 = std::log(-star) + ep / (1 - l);
    const auto m = zne_geometric(-std::exp(a0), -std::exp(a0 + (c - 1) * ep), -std::exp(a0 + (c - 1) * ep * l), c,
                                 ZneScheme::GeomMultiplicative);
    worst = std::max({worst, std::abs(r.e_star_hat - star), std::abs(m.e_star_hat - star)});
  }
  o.require(worst <= 1e-9, "round trip max error " + fmt(worst, 3));

  bool beats = true, above = true;
  std::string table;
  for (int i = 0; i < 5; ++i) {
    const double s2 = std::pow(10.0, -4.0 + 0.5 * i);
    const ZneMeasurements m = zne_measurements(angles(2), AngleImprecision{s2});
    const auto all = zne_all(m);
    const double lin = std::abs(all[0].e_star_hat - m.noiseless);
    const double add = std::abs(all[1].e_star_hat - m.noiseless);
    const double mul = std::abs(all[2].e_star_hat - m.noiseless);
    beats = beats && add <= lin && mul <= lin;
    for (const auto& r : all) above = above && r.e_star_hat >= m.noiseless;
    table += " [" + fmt(s2, 3) + ": lin " + fmt(lin, 2) + " add " + fmt(all[1].e_star_hat - m.noiseless, 2) + " mul " +
             fmt(all[2].e_star_hat - m.noiseless, 2) + "]";
  }
  o.require(beats, "geometric error <= linear error at every point");
  o.require(above, "no estimate below the noiseless energy;" + table);
  return o;
}

Outcome experimental_narrative() {
  Outcome o;
  for (InitialState s : {InitialState::Psi1, InitialState::Psi2}) {
    DynamicsSpec spec;
    spec.noise = AngleImprecision{0.112};
    spec.initial = s;
    spec.n_layers = 40;
    spec.observables = {"energy"};
    const TimeSeries ts = run_dynamics(angles(2), spec);
    const double e = ts.value(40, "energy");
    const double pct = 100 * (e - kExactEnergy) / std::abs(kExactEnergy);
    o.require(std::abs(e - -1.08) <= 0.02 && std::abs(pct - 15.2) <= 2,
              to_string(s) + " E=" + fmt(e, 5) + " (" + fmt(pct, 3) + "%)");
  }
  const GateCounts g = gate_counts(angles(2), 3, 12);
  o.require(g == GateCounts{120, 156, 33}, "gate counts " + std::to_string(g.ms_gates) + "/" +
                                               std::to_string(g.single_qubit_gates) + "/" + std::to_string(g.resets));
  const double e1 = named_observable(initial_state(InitialState::Psi1, 3).matrix(), "energy");
  const double e2 = named_observable(initial_state(InitialState::Psi2, 3).matrix(), "energy");
  o.require(std::abs(e1 + 32.0 / 27) < 1e-12 && std::abs(e2 + 16.0 / 27) < 1e-12,
            "e(psi1)=" + fmt(e1, 15) + " e(psi2)=" + fmt(e2, 15));
  return o;
}

Outcome dilution_properties() {
  Outcome o;
  DilutionSpec spec;
  spec.sigma2 = 1e-2;
  spec.l_start = 2;
  spec.l_max = 16;
  spec.n_trajectories = 500;
  spec.subsystem_sizes = {2};
  spec.seed = 99;
  const auto rows = dilution_study(angles(2), spec);
  std::vector<DilutionRow> global, sub;
  for (const auto& r : rows) (r.ell == 0 ? global : sub).push_back(r);
  bool flat = true;
  std::string g, s;
  for (const auto& r : global) {
    flat = flat && std::abs(r.fidelity - global[0].fidelity) <= 2 * std::hypot(r.stderr_fidelity, global[0].stderr_fidelity) + 1e-12;
    g += " L" + std::to_string(r.L) + "=" + fmt(r.fidelity, 6);
  }
  bool down = sub.size() >= 2;
  for (std::size_t i = 0; i < sub.size(); ++i) {
    if (i > 0) down = down && (1 - sub[i].fidelity) < (1 - sub[i - 1].fidelity);
    s += " L" + std::to_string(sub[i].L) + "=" + fmt(1 - sub[i].fidelity, 4);
  }
  o.require(flat, "global fidelity" + g);
  o.require(down, "ell=2 infidelity" + s);
  return o;
}

Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "dmera-acceptance-determinism";
  fs::remove_all(base);
  const std::vector<std::vector<std::string>> commands{
      {"dynamics", "--noise", "imprecision:sigma2=0.112", "--layers", "12"},
      {"dilution", "--grid", "0.01", "--lmax", "8", "--trajectories", "40", "--seed", "7"},
      {"ensemble", "--depths", "2", "--samples", "2", "--seed", "3"},
      {"sweep", "--grid", "0.0001,0.001,0.01"},
      {"zne", "--grid", "0.001,0.01"},
  };
  for (const auto& cmd : commands) {
    std::string contents[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = base / (cmd[0] + std::to_string(rep));
      std::vector<std::string> args{"dmera"};
      args.insert(args.end(), cmd.begin(), cmd.end());
      args.push_back("-o");
      args.push_back(dir.string());
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      const cli::RunConfig c = cli::parse_args(static_cast<int>(argv.size()), argv.data());
      std::ostringstream out, err;
      if (cli::dispatch(c, out, err) != 0) o.require(false, cmd[0] + " exited with " + err.str());
      for (const auto& f : fs::directory_iterator(dir))
        if (f.path().extension() == ".csv") {
          std::ifstream in(f.path(), std::ios::binary);
          std::stringstream ss;
          ss << in.rdbuf();
          contents[rep] += ss.str();
        }
    }
    o.require(!contents[0].empty() && contents[0] == contents[1], cmd[0] + " byte-identical");
  }
  fs::remove_all(base);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 table energies", table_energies},
      {"2 table dimensions", table_dimensions},
      {"3 CPTP suite", cptp_suite},
      {"4 decomposition equivalence", decomposition_equivalence},
      {"5 noise response exponent", noise_response_exponent},
      {"6 susceptibility ordering", susceptibility_ordering},
      {"7 zero-noise extrapolation", zero_noise_extrapolation},
      {"8 experimental narrative", experimental_narrative},
      {"9 dilution properties", dilution_properties},
      {"10 determinism", determinism},
  };
  std::string only = argc > 1 ? argv[1] : "";
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && name.rfind(only + " ", 0) != 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << "  (" << fmt(sec, 3) << " s)  " << o.detail
              << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
