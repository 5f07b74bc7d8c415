#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "dmera/types.hpp"

namespace dmera {

struct Noiseless {};

/// Gaussian MS rotation angle with variance sigma2 (rad^2).
struct AngleImprecision {
  double sigma2 = 0.0;
};

/// Gaussian MS angle whose variance is sigma2 * |theta| / (pi/2).
struct AngleProportional {
  double sigma2 = 0.0;
};

/// D_{p/2} on both qubits before and after every MS gate. Bias weights are (x, y, z).
struct Depolarizing {
  double p = 0.0;
  std::array<double, 3> bias{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

using NoiseModel = std::variant<Noiseless, AngleImprecision, AngleProportional, Depolarizing>;
using KrausSet = std::vector<Matrix>;

void validate(const NoiseModel& model);
bool is_noiseless(const NoiseModel& model);

/// Grammar: noiseless | imprecision:sigma2=<f> | proportional:sigma2=<f> |
///          depolarizing:p=<f>[,bias=x|y|z|iso]
NoiseModel parse_noise(const std::string& spec);
std::string to_string(const NoiseModel& model);
inline constexpr const char* kNoiseGrammar =
    "noiseless | imprecision:sigma2=<f> | proportional:sigma2=<f> | depolarizing:p=<f>[,bias=x|y|z|iso]";

/// Same family with its strength parameter replaced by `eps`.
NoiseModel with_strength(const NoiseModel& family, double eps);

/// Probability that the two bits are flipped after the ideal MS gate.
double flip_probability(double sigma2);

/// Kraus operators of a noisy XX(theta) gate. Depolarizing is not accepted here.
KrausSet noisy_ms_kraus(double theta, const NoiseModel& model);

/// {sqrt(1-p) I, sqrt(p bx) X, sqrt(p by) Y, sqrt(p bz) Z}; zero-weight terms dropped.
KrausSet depolarize_kraus(double p, const std::array<double, 3>& bias = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});

/// max-abs entry of sum_k K_k^dag K_k - I.
double completeness_residual(const KrausSet& kraus);

}  // namespace dmera
