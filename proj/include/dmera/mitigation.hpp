#pragma once

#include <string>
#include <vector>

#include "dmera/experiments.hpp"

namespace dmera {

struct AmplificationSpec {
  enum class Target { AllGates, Layer };
  Target target = Target::AllGates;
  int layer_from_end = 0;  // Layer target: 0 = last layer
  int repetitions = 1;     // odd
};

/// Per-layer channels for an n_layers stack where each targeted MS gate XX(t)
/// runs as XX(t)[XX(-t)XX(t)]^((r-1)/2), every physical gate noisy.
std::vector<Channel> amplify_gates(const AngleProfile& profile, const NoiseModel& noise, int n_layers,
                                   const AmplificationSpec& spec, ChannelKind kind = ChannelKind::Mixture);

/// Applies the stack in order.
DensityMatrix run_stack(const std::vector<Channel>& stack, DensityMatrix rho);

enum class ZneScheme { LinearFull, GeomAdditive, GeomMultiplicative };
ZneScheme parse_zne_scheme(const std::string& text);
std::string to_string(ZneScheme scheme);

struct ZneResult {
  ZneScheme scheme = ZneScheme::GeomAdditive;
  double e0 = 0.0, e_last = 0.0, e_second_last = 0.0;
  double e_star_hat = 0.0;
  double eps_hat = 0.0;
  double lambda_hat = 0.0;
  bool accepted = true;
  std::string warning;
};

/// (3 E1 - E3) / 2.
double zne_linear_full(double e_r1, double e_r3);

/// Closed-form inversion of E0 = E* + eps/(1-lambda), E_last = E0 + (c-1) eps,
/// E_second_last = E0 + (c-1) eps lambda; multiplicative applies it to ln|E|.
/// Fits with lambda outside (0,1) are rejected and return E0.
ZneResult zne_geometric(double e0, double e_last, double e_second_last, double c, ZneScheme mode);

/// Simulated energies for extrapolation from the noisy steady state.
struct ZneMeasurements {
  double noiseless = 0.0;     // noiseless fixed point
  double baseline = 0.0;      // noisy fixed point, r = 1
  double last = 0.0;          // last layer amplified
  double second_last = 0.0;   // second-to-last layer amplified
  double full = 0.0;          // every layer amplified (fixed point)
};

ZneMeasurements zne_measurements(const AngleProfile& profile, const NoiseModel& noise, int repetitions = 3,
                                 ChannelKind kind = ChannelKind::Mixture);

/// All three schemes on one set of measurements.
std::vector<ZneResult> zne_all(const ZneMeasurements& m, int repetitions = 3);

}  // namespace dmera
