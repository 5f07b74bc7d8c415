#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "dmera/channel.hpp"
#include "dmera/experiments.hpp"
#include "dmera/io.hpp"
#include "dmera/mitigation.hpp"
#include "dmera/spectral.hpp"

namespace py = pybind11;
using namespace dmera;

namespace {

Channel make_channel(const AngleProfile& p, const std::string& noise, const std::string& kind, int repetitions = 1) {
  return layer_channel(p, parse_channel_kind(kind), ChannelOptions{parse_noise(noise), repetitions});
}

py::dict zne_dict(const ZneResult& r) {
  py::dict d;
  d["scheme"] = to_string(r.scheme);
  d["e_star_hat"] = r.e_star_hat;
  d["eps_hat"] = r.eps_hat;
  d["lambda_hat"] = r.lambda_hat;
  d["accepted"] = r.accepted;
  d["warning"] = r.warning;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noisy DMERA layer channels";

  py::register_exception<Error>(m, "DmeraError", PyExc_ValueError);
  py::register_exception<cli::UsageError>(m, "UsageError", PyExc_ValueError);

  py::class_<AngleProfile>(m, "AngleProfile")
      .def(py::init([](std::vector<double> thetas, const std::string& variant) {
             AngleProfile p;
             p.depth = static_cast<int>(thetas.size());
             p.thetas = std::move(thetas);
             p.variant = parse_variant(variant);
             p.validate();
             return p;
           }),
           py::arg("thetas"), py::arg("variant") = "C1")
      .def_static("load", &AngleProfile::load)
      .def_static("from_json", &AngleProfile::from_json)
      .def("to_json", &AngleProfile::to_json)
      .def("digest", [](const AngleProfile& p) { return profile_digest(p); })
      .def_readonly("depth", &AngleProfile::depth)
      .def_readonly("thetas", &AngleProfile::thetas)
      .def_property_readonly("variant", [](const AngleProfile& p) { return to_string(p.variant); })
      .def("__repr__", [](const AngleProfile& p) { return "AngleProfile(" + p.to_json() + ")"; });

  m.def("channel_width", &channel_width, py::arg("depth"));
  m.def("noise_spec", [](const std::string& s) { return to_string(parse_noise(s)); }, py::arg("spec"),
        "Canonical form of a noise spec string.");

  m.def(
      "superoperator",
      [](const AngleProfile& p, const std::string& noise, const std::string& kind, int repetitions) {
        return Matrix(make_channel(p, noise, kind, repetitions).superoperator().matrix);
      },
      py::arg("profile"), py::arg("noise") = "noiseless", py::arg("kind") = "mixture", py::arg("repetitions") = 1,
      "Dense column-stacked superoperator of the layer channel.");

  m.def(
      "verify_cptp",
      [](const AngleProfile& p, const std::string& noise, const std::string& kind) {
        const CptpReport r = verify_cptp(make_channel(p, noise, kind).superoperator());
        py::dict d;
        d["tp_residual"] = r.tp_residual;
        d["choi_min_eigenvalue"] = r.choi_min_eigenvalue;
        d["max_abs_eigenvalue"] = r.max_abs_eigenvalue;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("profile"), py::arg("noise") = "noiseless", py::arg("kind") = "mixture");

  m.def(
      "spectrum",
      [](const AngleProfile& p, int k, const std::string& noise, const std::string& kind) {
        const Spectrum s = spectrum_topk(make_channel(p, noise, kind), k);
        std::vector<std::pair<cplx, double>> out;
        for (const auto& e : s.pairs) out.emplace_back(e.lambda, e.delta);
        return out;
      },
      py::arg("profile"), py::arg("k") = 32, py::arg("noise") = "noiseless", py::arg("kind") = "mixture",
      "Leading eigenvalues as (lambda, delta) pairs.");

  m.def(
      "primary_dimensions",
      [](const AngleProfile& p) {
        const PrimaryDimensions d = primary_dimensions(layer_channel(p));
        return std::make_pair(d.delta_sigma, d.delta_epsilon);
      },
      py::arg("profile"), "(delta_sigma, delta_epsilon) of the noiseless mixture channel.");

  m.def(
      "fixed_point",
      [](const AngleProfile& p, const std::string& noise, const std::string& kind) {
        return Matrix(fixed_point(make_channel(p, noise, kind), 1e-12, 100000, true).state.matrix());
      },
      py::arg("profile"), py::arg("noise") = "noiseless", py::arg("kind") = "mixture");

  m.def(
      "energy",
      [](const AngleProfile& p, const std::string& noise, const std::string& kind) {
        return evaluate_energy(p, parse_noise(noise), parse_channel_kind(kind)).energy;
      },
      py::arg("profile"), py::arg("noise") = "noiseless", py::arg("kind") = "mixture",
      "Fixed-point energy density.");

  m.def(
      "calibrate",
      [](int depth, const std::string& variant, double tol, int starts, std::uint64_t seed) {
        CalibrationOptions opt;
        opt.starts = starts;
        opt.seed = seed;
        const CalibrationResult r = calibrate_angles(depth, parse_variant(variant), tol, opt);
        py::dict d;
        d["profile"] = r.profile;
        d["energy"] = r.energy;
        d["delta_sigma"] = r.delta_sigma;
        d["delta_epsilon"] = r.delta_epsilon;
        d["evaluations"] = r.evaluations;
        return d;
      },
      py::arg("depth"), py::arg("variant") = "C1", py::arg("tol") = 1e-4, py::arg("starts") = 8,
      py::arg("seed") = 2021);

  m.def(
      "dynamics",
      [](const AngleProfile& p, const std::string& noise, const std::string& initial, int layers,
         std::vector<std::string> observables, const std::string& kind) {
        DynamicsSpec spec;
        spec.noise = parse_noise(noise);
        spec.initial = parse_initial(initial);
        spec.n_layers = layers;
        if (!observables.empty()) spec.observables = observables;
        spec.kind = parse_channel_kind(kind);
        const TimeSeries ts = run_dynamics(p, spec);
        py::dict d;
        for (const auto& name : spec.observables) {
          std::vector<double> v;
          for (int k = 0; k <= layers; ++k) v.push_back(ts.value(k, name));
          d[py::str(name)] = v;
        }
        return d;
      },
      py::arg("profile"), py::arg("noise") = "noiseless", py::arg("initial") = "psi1", py::arg("layers") = 12,
      py::arg("observables") = std::vector<std::string>{}, py::arg("kind") = "mixture",
      "Observable trajectories indexed by layer, layer 0 being the initial state.");

  m.def(
      "noise_response",
      [](const AngleProfile& p, double sigma2, int layers) {
        const NoiseResponse r = noise_response(p, sigma2, layers);
        py::dict d;
        d["noiseless_energy"] = r.noiseless_energy;
        d["excess"] = r.excess;
        d["delta_fit"] = r.delta_fit;
        return d;
      },
      py::arg("profile"), py::arg("sigma2"), py::arg("layers") = 10);

  m.def(
      "susceptibility",
      [](const AngleProfile& p, const std::string& family, std::vector<double> grid) {
        const SweepResult r = susceptibility_sweep(p, parse_noise(family), grid);
        py::dict d;
        d["noiseless_energy"] = r.noiseless_energy;
        d["slope"] = r.slope;
        d["fit_residual"] = r.fit_residual;
        return d;
      },
      py::arg("profile"), py::arg("family") = "imprecision:sigma2=0",
      py::arg("grid") = std::vector<double>{1e-4, 5e-4, 1e-3});

  m.def(
      "zne",
      [](const AngleProfile& p, const std::string& noise) {
        const ZneMeasurements meas = zne_measurements(p, parse_noise(noise));
        py::list out;
        for (const auto& r : zne_all(meas)) out.append(zne_dict(r));
        return py::make_tuple(meas.noiseless, out);
      },
      py::arg("profile"), py::arg("noise"), "(noiseless energy, results of every extrapolation scheme).");

  m.def(
      "zne_geometric",
      [](double e0, double e_last, double e_second_last, double c, const std::string& scheme) {
        return zne_dict(zne_geometric(e0, e_last, e_second_last, c, parse_zne_scheme(scheme)));
      },
      py::arg("e0"), py::arg("e_last"), py::arg("e_second_last"), py::arg("c") = 3.0,
      py::arg("scheme") = "geom-additive");

  m.def(
      "gate_counts",
      [](const AngleProfile& p, int n_out, int n_layers) {
        const GateCounts g = gate_counts(p, n_out, n_layers);
        return py::make_tuple(g.ms_gates, g.single_qubit_gates, g.resets);
      },
      py::arg("profile"), py::arg("n_out") = 3, py::arg("n_layers") = 12, "(ms, single-qubit, resets).");

  m.def(
      "dilution",
      [](const AngleProfile& p, double sigma2, int l_start, int l_max, std::vector<int> ells, int trajectories,
         std::uint64_t seed) {
        DilutionSpec spec{sigma2, l_start, l_max, ells, trajectories, seed};
        py::list out;
        for (const auto& r : dilution_study(p, spec)) {
          py::dict d;
          d["L"] = r.L;
          d["ell"] = r.ell;
          d["layer"] = r.layer;
          d["fidelity"] = r.fidelity;
          d["stderr"] = r.stderr_fidelity;
          out.append(d);
        }
        return out;
      },
      py::arg("profile"), py::arg("sigma2") = 1e-2, py::arg("l_start") = 4, py::arg("l_max") = 16,
      py::arg("ells") = std::vector<int>{1, 2, 3}, py::arg("trajectories") = 500, py::arg("seed") = 1);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "dmera");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        bool help = false;
        const cli::RunConfig c = cli::parse_args(static_cast<int>(argv.size()), argv.data(), &help, &out);
        const int code = help ? 0 : cli::dispatch(c, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a dmera subcommand in process; returns (exit code, stdout, stderr).");

  m.attr("__version__") = cli::kToolVersion;
}
