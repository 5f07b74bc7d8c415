#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmera/observables.hpp"
#include "dmera/spectral.hpp"

namespace dmera {

// ---- evaluation helpers ---------------------------------------------------

/// Noiseless or noisy fixed point of a layer channel and its energy.
struct ProfileEvaluation {
  double energy = 0.0;
  FixedPoint fixed;
};

ProfileEvaluation evaluate_energy(const AngleProfile& profile, const NoiseModel& noise = Noiseless{},
                                  ChannelKind kind = ChannelKind::Mixture, double tol = 1e-12);

/// Delta of the leading parity-odd (sigma) and the leading non-identity
/// parity-even (epsilon) eigenvalues.
struct PrimaryDimensions {
  double delta_sigma = 0.0;
  double delta_epsilon = 0.0;
};
PrimaryDimensions primary_dimensions(const Spectrum& spectrum, int n_qubits);
/// Same from parity-sector eigensolves of an XX-convention channel; optionally
/// returns the trace-normalized leading even eigenvector (the fixed point).
PrimaryDimensions primary_dimensions(const Channel& channel, Matrix* fixed_point = nullptr);

/// Table values for D = 2 and D = 4; empty otherwise.
std::optional<double> table_energy(int depth);
std::optional<double> table_delta_sigma(int depth);

// ---- calibration ----------------------------------------------------------

struct CalibrationOptions {
  int starts = 32;
  std::uint64_t seed = 2021;
  int max_evaluations = 600;      // per start
  double energy_cutoff = -1.2;    // acceptance for depths without a table target
  ChannelKind kind = ChannelKind::Mixture;
};

struct CalibrationResult {
  AngleProfile profile;
  double energy = 0.0;
  double delta_sigma = 0.0;
  double delta_epsilon = 0.0;
  double objective = 0.0;
  long evaluations = 0;
};

/// Multi-start Nelder-Mead. With a table target the objective matches the
/// target energy and the exact epsilon dimension, with a weaker pull of the
/// sigma dimension to its table value; otherwise the fixed-point energy is
/// minimized.
/// Throws ConvergenceError if no start meets `target_tol` (or the cutoff).
CalibrationResult calibrate_angles(int depth, Variant variant, double target_tol,
                                   const CalibrationOptions& options = {});

// ---- dynamics -------------------------------------------------------------

struct TimeSeriesRow {
  int layer;
  std::string observable;
  double value;
};

struct TimeSeries {
  std::vector<TimeSeriesRow> rows;
  double value(int layer, const std::string& observable) const;
};

struct DynamicsSpec {
  NoiseModel noise = Noiseless{};
  InitialState initial = InitialState::Psi1;
  int n_layers = 12;
  std::vector<std::string> observables{"X", "Z", "ZZ", "ZXZ", "energy"};
  ChannelKind kind = ChannelKind::Mixture;
};

/// Layer 0 is the initial product state; layer k follows k channel applications.
TimeSeries run_dynamics(const AngleProfile& profile, const DynamicsSpec& spec);

/// Exponential decay constant of |series_k - asymptote| fitted over the tail.
double fitted_decay_rate(const std::vector<double>& series, double asymptote, double floor = 1e-13);

// ---- noise response -------------------------------------------------------

struct NoiseResponse {
  double noiseless_energy = 0.0;
  std::vector<double> excess;  // E_k - E*, k = 0..n_post
  double delta_fit = 0.0;
  int points_used = 0;
};

/// One noisy layer on the noiseless fixed point, then noiseless layers. The
/// decay is fitted over all recorded layers above the numerical floor.
NoiseResponse noise_response(const AngleProfile& profile, double sigma2, int n_post_layers,
                             ChannelKind kind = ChannelKind::Mixture);

// ---- susceptibility -------------------------------------------------------

struct SweepRow {
  double epsilon;
  double energy;
  double percent_error;  // relative to -4/pi
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double noiseless_energy = 0.0;
  double slope = 0.0;         // dE/d(epsilon)
  double fit_residual = 0.0;  // rms of the linear fit
};

/// Noisy fixed-point energies on `epsilon_grid`; slope from the smallest three
/// points with epsilon <= 1e-3, fitted through the noiseless energy.
SweepResult susceptibility_sweep(const AngleProfile& profile, const NoiseModel& family,
                                 const std::vector<double>& epsilon_grid, ChannelKind kind = ChannelKind::Mixture);

struct EnsembleSpec {
  int depth = 2;
  Variant variant = Variant::C2;
  int samples = 16;
  double cutoff = -1.2;
  double angle_range = kPi / 2;  // uniform in [-range, range]
  std::uint64_t seed = 1;
  std::vector<double> epsilon_grid{1e-4, 5e-4, 1e-3};
  long max_draws = 0;  // 0: 1000 * samples
};

struct EnsembleResult {
  int depth = 0;
  double mean_slope = 0.0;
  double stderr_slope = 0.0;
  int n = 0;
  long draws = 0;
  std::vector<double> slopes;
};

EnsembleResult depth_ensemble(const EnsembleSpec& spec, const NoiseModel& family);

// ---- dilution -------------------------------------------------------------

struct DilutionSpec {
  double sigma2 = 1e-2;
  int l_start = 4;
  int l_max = 16;
  std::vector<int> subsystem_sizes{1, 2, 3};
  int n_trajectories = 500;
  std::uint64_t seed = 1;
};

struct DilutionRow {
  int L;
  int ell;       // 0 denotes the global state
  int layer;     // layers applied after the noisy one
  double fidelity;
  double stderr_fidelity;
};

/// Pure-state trajectories on a periodic chain: a noisy first layer followed
/// by noiseless layers, fidelities against the noiseless reference.
std::vector<DilutionRow> dilution_study(const AngleProfile& profile, const DilutionSpec& spec);

/// One periodic scale layer on a pure state of L sites (L even >= 4), giving
/// 2L sites. With `rng`, every physical MS angle receives Gaussian noise of
/// variance sigma2.
Vector apply_periodic_layer(const AngleProfile& profile, const Vector& psi, double sigma2 = 0.0,
                            std::mt19937_64* rng = nullptr);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double uhlmann_fidelity(const Matrix& a, const Matrix& b);

// ---- noise fitting --------------------------------------------------------

struct MeasuredPoint {
  int layer;
  std::string observable;
  double mean;
  double n_samples;
};

struct FitResult {
  double sigma2 = 0.0;
  double residual = 0.0;
  std::vector<std::pair<double, double>> grid;  // (sigma2, residual)
};

/// Grid search with parabolic refinement. Residuals are sample-weighted
/// squared deviations over the selected observables.
FitResult fit_sigma2(const std::vector<MeasuredPoint>& measured, const AngleProfile& profile,
                     const std::vector<double>& sigma2_grid, InitialState initial,
                     const std::vector<std::string>& observables = {});

}  // namespace dmera
