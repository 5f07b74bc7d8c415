#include "dmera/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <gsl/gsl_multimin.h>

#include "dmera/engine.hpp"

namespace dmera {

namespace {

Channel make_channel(const AngleProfile& profile, const NoiseModel& noise, ChannelKind kind, int repetitions = 1) {
  ChannelOptions opt;
  opt.noise = noise;
  opt.repetitions = repetitions;
  Channel ch = layer_channel(profile, kind, opt);
  // Small maps are cheaper as dense matrices.
  if (ch.n_qubits() <= 4) return Channel(ch.superoperator());
  return ch;
}

FixedPoint channel_fixed_point(const Channel& ch, double tol) {
  return fixed_point(ch, tol, 100000, ch.n_qubits() > 5);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

ProfileEvaluation evaluate_energy(const AngleProfile& profile, const NoiseModel& noise, ChannelKind kind, double tol) {
  const Channel ch = make_channel(profile, noise, kind);
  ProfileEvaluation e;
  e.fixed = channel_fixed_point(ch, tol);
  e.energy = window_energy(e.fixed.state.matrix());
  return e;
}

PrimaryDimensions primary_dimensions(const Spectrum& spectrum, int n_qubits) {
  PrimaryDimensions p{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  bool seen_identity = false;
  for (const auto& e : spectrum.pairs) {
    const int parity = operator_parity(e.vector, n_qubits);
    if (parity < 0 && std::isnan(p.delta_sigma)) p.delta_sigma = e.delta;
    if (parity > 0) {
      if (!seen_identity && std::abs(e.lambda - cplx{1.0}) < 1e-6) {
        seen_identity = true;
      } else if (std::isnan(p.delta_epsilon)) {
        p.delta_epsilon = e.delta;
      }
    }
  }
  return p;
}

PrimaryDimensions primary_dimensions(const Channel& channel, Matrix* fixed_point_out) {
  SpectralOptions opt;
  opt.residual_tol = 1e-9;
  opt.parity = 1;
  const Spectrum even = spectrum_topk(channel, 2, opt);
  opt.parity = -1;
  const Spectrum odd = spectrum_topk(channel, 1, opt);
  if (fixed_point_out) {
    Matrix rho = unvectorize(even.pairs.at(0).vector);
    rho /= rho.trace();
    *fixed_point_out = (rho + rho.adjoint()) / 2.0;
  }
  return {odd.pairs.at(0).delta, even.pairs.at(1).delta};
}

std::optional<double> table_energy(int depth) {
  if (depth == 2) return -1.23948;
  if (depth == 4) return -1.26757;
  return std::nullopt;
}

std::optional<double> table_delta_sigma(int depth) {
  if (depth == 2) return 0.136;
  if (depth == 4) return 0.123;
  return std::nullopt;
}

// ---- calibration ----------------------------------------------------------

namespace {

struct Analysis {
  double energy;
  PrimaryDimensions dims;
};

Analysis analyze(const AngleProfile& profile, ChannelKind kind, bool want_dims) {
  const Channel ch = make_channel(profile, Noiseless{}, kind);
  if (!want_dims) return {window_energy(channel_fixed_point(ch, 1e-11).state.matrix()), {}};
  Matrix rho;
  const PrimaryDimensions dims = primary_dimensions(ch, &rho);
  return {window_energy(rho), dims};
}

using Objective = std::function<double(const std::vector<double>&)>;

struct NmResult {
  std::vector<double> x;
  double f;
  long evaluations;
};

double gsl_trampoline(const gsl_vector* v, void* params) {
  const auto& f = *static_cast<const Objective*>(params);
  std::vector<double> x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  const double y = f(x);
  return std::isfinite(y) ? y : 1e300;
}

NmResult nelder_mead(const Objective& f, const std::vector<double>& start, double step, int max_evals, double size_tol) {
  const std::size_t n = start.size();
  gsl_multimin_function fn{&gsl_trampoline, n, const_cast<Objective*>(&f)};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(ss, i, step);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  long evals = static_cast<long>(n) + 1;
  for (int it = 0; evals < max_evals; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    evals += 2;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol) == GSL_SUCCESS) break;
  }
  NmResult r;
  for (std::size_t i = 0; i < n; ++i) r.x.push_back(gsl_vector_get(s->x, i));
  r.f = s->fval;
  r.evaluations = evals;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(ss);
  return r;
}

}  // namespace

CalibrationResult calibrate_angles(int depth, Variant variant, double target_tol, const CalibrationOptions& options) {
  if (depth < 2 || depth > 4) throw std::invalid_argument("calibration supports depth 2, 3 or 4");
  if (options.starts < 1) throw std::invalid_argument("calibration needs at least one start");
  const std::optional<double> target = table_energy(depth);
  const double sigma_target = table_delta_sigma(depth).value_or(0.125);
  auto profile_of = [&](const std::vector<double>& x) {
    AngleProfile p;
    p.depth = depth;
    p.thetas = x;
    p.variant = variant;
    return p;
  };
  long evaluations = 0;
  Objective objective = [&](const std::vector<double>& x) {
    ++evaluations;
    const Analysis a = analyze(profile_of(x), options.kind, target.has_value());
    if (!target) return a.energy;
    if (std::isnan(a.dims.delta_epsilon) || std::isnan(a.dims.delta_sigma)) return 1e12;
    const double de = (a.energy - *target) / (0.1 * target_tol);
    const double dx = (a.dims.delta_epsilon - 1.0) / 1e-4;
    const double ds = (a.dims.delta_sigma - sigma_target) / 0.01;
    return de * de + dx * dx + ds * ds;
  };

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(-kPi / 2, kPi / 2);
  std::optional<CalibrationResult> best;
  for (int s = 0; s < options.starts; ++s) {
    std::vector<double> start(depth);
    for (double& v : start) v = uni(rng);
    const NmResult r = nelder_mead(objective, start, 0.3, options.max_evaluations, 1e-8);
    if (!best || r.f < best->objective) {
      CalibrationResult c;
      c.profile = profile_of(r.x);
      c.objective = r.f;
      best = c;
    }
  }
  CalibrationResult out = *best;
  const Analysis a = analyze(out.profile, options.kind, true);
  out.energy = a.energy;
  out.delta_sigma = a.dims.delta_sigma;
  out.delta_epsilon = a.dims.delta_epsilon;
  out.evaluations = evaluations;
  if (target) {
    if (std::abs(out.energy - *target) > target_tol)
      throw ConvergenceError("calibration missed the target energy: best " + std::to_string(out.energy));
  } else if (!(out.energy < options.energy_cutoff)) {
    throw ConvergenceError("calibration did not reach the energy cutoff: best " + std::to_string(out.energy));
  }
  return out;
}

// ---- dynamics -------------------------------------------------------------

double TimeSeries::value(int layer, const std::string& observable) const {
  for (const auto& r : rows)
    if (r.layer == layer && r.observable == observable) return r.value;
  throw std::out_of_range("time series has no entry for " + observable + " at layer " + std::to_string(layer));
}

TimeSeries run_dynamics(const AngleProfile& profile, const DynamicsSpec& spec) {
  if (spec.n_layers < 0) throw std::invalid_argument("n_layers must be >= 0");
  for (const auto& o : spec.observables)
    if (!is_known_observable(o)) throw std::invalid_argument("unknown observable '" + o + "'");
  const Channel ch = make_channel(profile, spec.noise, spec.kind);
  DensityMatrix rho = initial_state(spec.initial, ch.n_qubits(), Convention::XX);
  TimeSeries ts;
  for (int layer = 0; layer <= spec.n_layers; ++layer) {
    if (layer > 0) rho = apply_channel(ch, rho);
    for (const auto& o : spec.observables) ts.rows.push_back({layer, o, named_observable(rho.matrix(), o)});
  }
  return ts;
}

double fitted_decay_rate(const std::vector<double>& series, double asymptote, double floor) {
  std::vector<double> k, y;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double d = std::abs(series[i] - asymptote);
    if (d <= floor) break;
    k.push_back(static_cast<double>(i));
    y.push_back(std::log(d));
  }
  if (k.size() < 3) throw ConvergenceError("fewer than three usable points for a decay fit");
  return -least_squares_slope(k, y);
}

// ---- noise response -------------------------------------------------------

NoiseResponse noise_response(const AngleProfile& profile, double sigma2, int n_post_layers, ChannelKind kind) {
  if (!(sigma2 > 0)) throw std::invalid_argument("noise_response needs sigma2 > 0");
  if (n_post_layers < 3) throw std::invalid_argument("noise_response needs at least 3 post layers");
  const Channel clean = make_channel(profile, Noiseless{}, kind);
  const Channel noisy = make_channel(profile, AngleImprecision{sigma2}, kind);
  const FixedPoint fp = channel_fixed_point(clean, 1e-13);
  NoiseResponse out;
  out.noiseless_energy = window_energy(fp.state.matrix());
  DensityMatrix rho = apply_channel(noisy, fp.state);
  for (int k = 0; k <= n_post_layers; ++k) {
    if (k > 0) rho = apply_channel(clean, rho);
    out.excess.push_back(window_energy(rho.matrix()) - out.noiseless_energy);
  }
  // Fit log2|E_k - E*| from k = 0 until a sign change or a relative floor;
  // below the floor slow modes with tiny weight take over.
  std::vector<double> kk, y;
  const double floor = 1e-9 * std::abs(out.excess[0]);
  for (int k = 0; k <= n_post_layers; ++k) {
    const double d = out.excess[k];
    if (std::abs(d) <= floor || (k > 0 && (d > 0) != (out.excess[0] > 0))) break;
    kk.push_back(k);
    y.push_back(std::log2(std::abs(d)));
  }
  if (kk.size() < 3) throw ConvergenceError("noise response hit the numerical floor before three usable points");
  out.delta_fit = -least_squares_slope(kk, y);
  out.points_used = static_cast<int>(kk.size());
  return out;
}

// ---- susceptibility -------------------------------------------------------

SweepResult susceptibility_sweep(const AngleProfile& profile, const NoiseModel& family,
                                 const std::vector<double>& epsilon_grid, ChannelKind kind) {
  if (epsilon_grid.empty()) throw std::invalid_argument("epsilon grid is empty");
  if (!std::is_sorted(epsilon_grid.begin(), epsilon_grid.end()) || epsilon_grid.front() < 0)
    throw std::invalid_argument("epsilon grid must be sorted and nonnegative");
  SweepResult out;
  out.noiseless_energy = evaluate_energy(profile, Noiseless{}, kind).energy;
  std::vector<double> fx, fy;
  for (double eps : epsilon_grid) {
    const double e = eps == 0 ? out.noiseless_energy : evaluate_energy(profile, with_strength(family, eps), kind).energy;
    out.rows.push_back({eps, e, 100.0 * std::abs(e - kExactEnergy) / std::abs(kExactEnergy)});
    if (eps > 0 && eps <= 1e-3 && fx.size() < 3) {
      fx.push_back(eps);
      fy.push_back(e - out.noiseless_energy);
    }
  }
  if (fx.empty()) throw std::invalid_argument("slope fit needs a grid point in (0, 1e-3]");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    sxy += fx[i] * fy[i];
    sxx += fx[i] * fx[i];
  }
  out.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) rss += std::pow(fy[i] - out.slope * fx[i], 2);
  out.fit_residual = std::sqrt(rss / fx.size());
  return out;
}

EnsembleResult depth_ensemble(const EnsembleSpec& spec, const NoiseModel& family) {
  if (spec.samples < 1) throw std::invalid_argument("ensemble needs at least one sample");
  if (!(spec.cutoff < 0)) throw std::invalid_argument("ensemble cutoff must be negative");
  const long max_draws = spec.max_draws > 0 ? spec.max_draws : 1000L * spec.samples;
  EnsembleResult out;
  out.depth = spec.depth;
  std::uniform_real_distribution<double> uni(-spec.angle_range, spec.angle_range);
  for (long draw = 0; out.n < spec.samples; ++draw) {
    if (draw >= max_draws)
      throw ConvergenceError("ensemble rejection rate too high: " + std::to_string(out.n) + " accepted in " +
                             std::to_string(draw) + " draws");
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(draw));
    AngleProfile p;
    p.depth = spec.depth;
    p.variant = spec.variant;
    for (int i = 0; i < spec.depth; ++i) p.thetas.push_back(uni(rng));
    // Cheap screen before the full fixed point.
    const double e = evaluate_energy(p, Noiseless{}, ChannelKind::Mixture, 1e-9).energy;
    out.draws = draw + 1;
    if (!(e < spec.cutoff)) continue;
    out.slopes.push_back(susceptibility_sweep(p, family, spec.epsilon_grid).slope);
    ++out.n;
  }
  out.mean_slope = std::accumulate(out.slopes.begin(), out.slopes.end(), 0.0) / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double s : out.slopes) ss += (s - out.mean_slope) * (s - out.mean_slope);
    out.stderr_slope = std::sqrt(ss / (out.n - 1) / out.n);
  }
  return out;
}

// ---- dilution -------------------------------------------------------------

namespace {

void apply_gate_pure(Vector& psi, int n_sites, const Matrix& u, int a, int b) {
  cplx m[16];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r * 4 + c] = u(r, c);
  kernels::apply_2q(psi.data(), n_sites, n_sites - 1 - a, n_sites - 1 - b, m);
}

Matrix reduced_from_pure(const Vector& psi, int n_sites, const std::vector<int>& sites) {
  const int k = static_cast<int>(sites.size());
  std::vector<int> rest;
  for (int q = 0; q < n_sites; ++q)
    if (std::find(sites.begin(), sites.end(), q) == sites.end()) rest.push_back(q);
  const Eigen::Index dk = Eigen::Index{1} << k, dr = Eigen::Index{1} << rest.size();
  Matrix m(dk, dr);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    Eigen::Index a = 0, t = 0;
    for (int j = 0; j < k; ++j) a = (a << 1) | ((i >> (n_sites - 1 - sites[j])) & 1);
    for (int q : rest) t = (t << 1) | ((i >> (n_sites - 1 - q)) & 1);
    m(a, t) = psi(i);
  }
  return m * m.adjoint();
}

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((a + a.adjoint()) / 2.0);
  const RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double uhlmann_fidelity(const Matrix& a, const Matrix& b) {
  const Matrix s = psd_sqrt(a);
  const Matrix m = s * b * s;
  Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  const double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return t * t;
}

Vector apply_periodic_layer(const AngleProfile& profile, const Vector& psi, double sigma2, std::mt19937_64* rng) {
  profile.validate();
  const int L = log2_dim(psi.size());
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("periodic layer needs an even number of sites >= 2");
  const int n = 2 * L;
  // Fine site 2i is a fresh ancilla, 2i+1 carries coarse site i.
  Vector out = Vector::Zero(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    Eigen::Index j = 0;
    for (int s = 0; s < L; ++s)
      if ((i >> (L - 1 - s)) & 1) j |= Eigen::Index{1} << (n - 1 - (2 * s + 1));
    out(j) = psi(i);
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(std::max(sigma2, 0.0)));
  auto apply = [&](GateKind kind, double theta, int a, int b) {
    if (!rng || sigma2 <= 0) {
      apply_gate_pure(out, n, gate_matrix(kind, theta), a, b);
      return;
    }
    GateSequence seq = decompose_gate(kind, theta, profile.variant);
    for (auto& g : seq)
      if (g.is_ms()) g.angle += normal(*rng);
    apply_gate_pure(out, n, sequence_matrix(seq, 2), a, b);
  };
  for (int i = 0; i < n; i += 2) apply(GateKind::W, profile.thetas[0], i, i + 1);
  for (int d = 1; d < profile.depth; ++d)
    for (int i = d % 2; i < n; i += 2) apply(GateKind::U, profile.thetas[d], i, (i + 1) % n);
  return out;
}

std::vector<DilutionRow> dilution_study(const AngleProfile& profile, const DilutionSpec& spec) {
  if (spec.l_max > 16) throw std::invalid_argument("dilution study is capped at L = 16");
  if (spec.l_start < 2 || spec.l_start % 2 != 0 || spec.l_start * 2 > spec.l_max)
    throw std::invalid_argument("dilution needs an even start size with at least one doubling up to l_max");
  if (spec.n_trajectories < 2) throw std::invalid_argument("dilution needs at least two trajectories");
  for (int ell : spec.subsystem_sizes)
    if (ell < 1 || ell > 6) throw std::invalid_argument("subsystem sizes must be in [1, 6]");

  Vector start = Vector::Zero(Eigen::Index{1} << spec.l_start);
  start(0) = 1.0;
  std::vector<Vector> reference;  // after each layer
  for (Vector psi = start; 2 * log2_dim(psi.size()) <= spec.l_max;) {
    psi = apply_periodic_layer(profile, psi);
    reference.push_back(psi);
  }
  const int n_layers = static_cast<int>(reference.size());
  const int batches = std::min(10, spec.n_trajectories);

  // Accumulators: per layer, per ell, per window; per batch for jackknife.
  struct Acc {
    std::vector<std::vector<Matrix>> batch;  // [batch][window]
  };
  std::vector<std::vector<Acc>> acc(n_layers, std::vector<Acc>(spec.subsystem_sizes.size()));
  std::vector<std::vector<double>> global(n_layers);
  for (int layer = 0; layer < n_layers; ++layer) {
    const int L = log2_dim(reference[layer].size());
    for (std::size_t e = 0; e < spec.subsystem_sizes.size(); ++e) {
      const Eigen::Index dk = Eigen::Index{1} << spec.subsystem_sizes[e];
      acc[layer][e].batch.assign(batches, std::vector<Matrix>(L, Matrix::Zero(dk, dk)));
    }
  }

  for (int t = 0; t < spec.n_trajectories; ++t) {
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(t));
    Vector psi = start;
    for (int layer = 0; layer < n_layers; ++layer) {
      psi = layer == 0 ? apply_periodic_layer(profile, psi, spec.sigma2, &rng) : apply_periodic_layer(profile, psi);
      const int L = log2_dim(psi.size());
      global[layer].push_back(std::norm(reference[layer].dot(psi)));
      for (std::size_t e = 0; e < spec.subsystem_sizes.size(); ++e) {
        const int ell = spec.subsystem_sizes[e];
        for (int w = 0; w < L; ++w) {
          std::vector<int> sites;
          for (int j = 0; j < ell; ++j) sites.push_back((w + j) % L);
          acc[layer][e].batch[t % batches][w] += reduced_from_pure(psi, L, sites);
        }
      }
    }
  }

  std::vector<DilutionRow> rows;
  for (int layer = 0; layer < n_layers; ++layer) {
    const int L = log2_dim(reference[layer].size());
    const auto& g = global[layer];
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
    double ss = 0.0;
    for (double x : g) ss += (x - mean) * (x - mean);
    rows.push_back({L, 0, layer, mean, std::sqrt(ss / (g.size() - 1) / g.size())});
    for (std::size_t e = 0; e < spec.subsystem_sizes.size(); ++e) {
      const int ell = spec.subsystem_sizes[e];
      const auto& b = acc[layer][e].batch;
      std::vector<Matrix> ref(L);
      for (int w = 0; w < L; ++w) {
        std::vector<int> sites;
        for (int j = 0; j < ell; ++j) sites.push_back((w + j) % L);
        ref[w] = reduced_from_pure(reference[layer], L, sites);
      }
      std::vector<int> counts(batches, 0);
      for (int t = 0; t < spec.n_trajectories; ++t) ++counts[t % batches];
      auto fidelity_excluding = [&](int skip) {
        double f = 0.0;
        for (int w = 0; w < L; ++w) {
          Matrix sum = Matrix::Zero(ref[w].rows(), ref[w].cols());
          int total = 0;
          for (int k = 0; k < batches; ++k)
            if (k != skip) {
              sum += b[k][w];
              total += counts[k];
            }
          f += uhlmann_fidelity(sum / static_cast<double>(total), ref[w]);
        }
        return f / L;
      };
      const double full = fidelity_excluding(-1);
      double jk_mean = 0.0;
      std::vector<double> jk(batches);
      for (int k = 0; k < batches; ++k) jk_mean += (jk[k] = fidelity_excluding(k)) / batches;
      double var = 0.0;
      for (double x : jk) var += (x - jk_mean) * (x - jk_mean);
      var *= static_cast<double>(batches - 1) / batches;
      rows.push_back({L, ell, layer, full, std::sqrt(var)});
    }
  }
  return rows;
}

// ---- noise fitting --------------------------------------------------------

namespace {

double fit_residual(const std::vector<MeasuredPoint>& measured, const AngleProfile& profile, double sigma2,
                    InitialState initial, const std::vector<std::string>& observables) {
  DynamicsSpec spec;
  spec.noise = sigma2 > 0 ? NoiseModel{AngleImprecision{sigma2}} : NoiseModel{Noiseless{}};
  spec.initial = initial;
  spec.observables = observables;
  spec.n_layers = 0;
  for (const auto& m : measured) spec.n_layers = std::max(spec.n_layers, m.layer);
  const TimeSeries ts = run_dynamics(profile, spec);
  double num = 0.0, den = 0.0;
  for (const auto& m : measured) {
    if (std::find(observables.begin(), observables.end(), m.observable) == observables.end()) continue;
    const double d = ts.value(m.layer, m.observable) - m.mean;
    num += m.n_samples * d * d;
    den += m.n_samples;
  }
  return num / den;
}

}  // namespace

FitResult fit_sigma2(const std::vector<MeasuredPoint>& measured, const AngleProfile& profile,
                     const std::vector<double>& sigma2_grid, InitialState initial,
                     const std::vector<std::string>& observables) {
  if (measured.empty()) throw std::invalid_argument("no measured data");
  if (sigma2_grid.empty()) throw std::invalid_argument("sigma2 grid is empty");
  std::vector<std::string> obs = observables;
  if (obs.empty())
    for (const auto& m : measured)
      if (std::find(obs.begin(), obs.end(), m.observable) == obs.end()) obs.push_back(m.observable);
  for (const auto& o : obs)
    if (!is_known_observable(o)) throw std::invalid_argument("unknown observable '" + o + "'");
  std::vector<double> grid = sigma2_grid;
  std::sort(grid.begin(), grid.end());
  FitResult out;
  for (double s : grid) out.grid.emplace_back(s, fit_residual(measured, profile, s, initial, obs));
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.grid.size(); ++i)
    if (out.grid[i].second < out.grid[best].second) best = i;
  out.sigma2 = out.grid[best].first;
  out.residual = out.grid[best].second;
  if (best > 0 && best + 1 < out.grid.size()) {
    const auto [x0, y0] = out.grid[best - 1];
    const auto [x1, y1] = out.grid[best];
    const auto [x2, y2] = out.grid[best + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if (a > 0) {
      const double xv = std::clamp(-b / (2 * a), x0, x2);
      const double yv = fit_residual(measured, profile, xv, initial, obs);
      if (yv < out.residual) {
        out.sigma2 = xv;
        out.residual = yv;
      }
    }
  }
  return out;
}

}  // namespace dmera
