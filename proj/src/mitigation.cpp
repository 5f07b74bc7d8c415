#include "dmera/mitigation.hpp"

#include <cmath>

namespace dmera {

std::vector<Channel> amplify_gates(const AngleProfile& profile, const NoiseModel& noise, int n_layers,
                                   const AmplificationSpec& spec, ChannelKind kind) {
  if (n_layers < 0) throw std::invalid_argument("n_layers must be >= 0");
  if (spec.repetitions < 1 || spec.repetitions % 2 == 0) throw std::invalid_argument("repetitions must be odd and >= 1");
  if (spec.target == AmplificationSpec::Target::Layer && (spec.layer_from_end < 0 || spec.layer_from_end >= n_layers))
    throw std::invalid_argument("amplified layer outside the stack");
  ChannelOptions plain{noise, 1}, amplified{noise, spec.repetitions};
  const Channel base = layer_channel(profile, kind, plain);
  const Channel amp = spec.repetitions == 1 ? base : layer_channel(profile, kind, amplified);
  std::vector<Channel> stack;
  for (int i = 0; i < n_layers; ++i) {
    const bool hit = spec.target == AmplificationSpec::Target::AllGates || n_layers - 1 - i == spec.layer_from_end;
    stack.push_back(hit ? amp : base);
  }
  return stack;
}

DensityMatrix run_stack(const std::vector<Channel>& stack, DensityMatrix rho) {
  for (const auto& ch : stack) rho = apply_channel(ch, rho);
  return rho;
}

ZneScheme parse_zne_scheme(const std::string& text) {
  if (text == "linear") return ZneScheme::LinearFull;
  if (text == "geom-additive") return ZneScheme::GeomAdditive;
  if (text == "geom-multiplicative") return ZneScheme::GeomMultiplicative;
  throw std::invalid_argument("unknown scheme '" + text + "' (expected linear|geom-additive|geom-multiplicative)");
}

std::string to_string(ZneScheme scheme) {
  switch (scheme) {
    case ZneScheme::LinearFull: return "linear";
    case ZneScheme::GeomAdditive: return "geom-additive";
    case ZneScheme::GeomMultiplicative: return "geom-multiplicative";
  }
  return "?";
}

double zne_linear_full(double e_r1, double e_r3) { return (3.0 * e_r1 - e_r3) / 2.0; }

ZneResult zne_geometric(double e0, double e_last, double e_second_last, double c, ZneScheme mode) {
  if (!(c > 1)) throw std::invalid_argument("amplification factor must exceed 1");
  if (!std::isfinite(e0) || !std::isfinite(e_last) || !std::isfinite(e_second_last))
    throw std::invalid_argument("energies must be finite");
  if (mode == ZneScheme::LinearFull) throw std::invalid_argument("zne_geometric needs a geometric mode");
  ZneResult r;
  r.scheme = mode;
  r.e0 = e0;
  r.e_last = e_last;
  r.e_second_last = e_second_last;
  double sign = 1.0;
  double a0 = e0, al = e_last, as = e_second_last;
  if (mode == ZneScheme::GeomMultiplicative) {
    if ((e0 > 0) != (e_last > 0) || (e0 > 0) != (e_second_last > 0) || e0 == 0 || e_last == 0 || e_second_last == 0)
      throw std::invalid_argument("multiplicative model needs energies of one sign");
    sign = e0 > 0 ? 1.0 : -1.0;
    a0 = std::log(std::abs(e0));
    al = std::log(std::abs(e_last));
    as = std::log(std::abs(e_second_last));
  }
  r.e_star_hat = e0;
  if (al == a0) {
    r.accepted = false;
    r.warning = "amplified energy equals the baseline";
    return r;
  }
  r.eps_hat = (al - a0) / (c - 1.0);
  r.lambda_hat = (as - a0) / (al - a0);
  if (!(r.lambda_hat > 0.0 && r.lambda_hat < 1.0)) {
    r.accepted = false;
    r.warning = "lambda outside (0, 1); baseline returned";
    return r;
  }
  const double star = a0 - r.eps_hat / (1.0 - r.lambda_hat);
  r.e_star_hat = mode == ZneScheme::GeomMultiplicative ? sign * std::exp(star) : star;
  return r;
}

ZneMeasurements zne_measurements(const AngleProfile& profile, const NoiseModel& noise, int repetitions,
                                 ChannelKind kind) {
  ZneMeasurements m;
  m.noiseless = evaluate_energy(profile, Noiseless{}, kind).energy;
  const ProfileEvaluation steady = evaluate_energy(profile, noise, kind);
  m.baseline = steady.energy;
  // The stack is entered at the noisy steady state, so only the final two layers matter.
  AmplificationSpec last{AmplificationSpec::Target::Layer, 0, repetitions};
  AmplificationSpec second{AmplificationSpec::Target::Layer, 1, repetitions};
  m.last = window_energy(run_stack(amplify_gates(profile, noise, 2, last, kind), steady.fixed.state).matrix());
  m.second_last = window_energy(run_stack(amplify_gates(profile, noise, 2, second, kind), steady.fixed.state).matrix());
  ChannelOptions amp{noise, repetitions};
  const Channel full = layer_channel(profile, kind, amp);
  m.full = window_energy(fixed_point(full, 1e-12, 100000, full.n_qubits() > 5).state.matrix());
  return m;
}

std::vector<ZneResult> zne_all(const ZneMeasurements& m, int repetitions) {
  std::vector<ZneResult> out;
  ZneResult lin;
  lin.scheme = ZneScheme::LinearFull;
  lin.e0 = m.baseline;
  lin.e_last = m.full;
  lin.e_second_last = std::nan("");
  lin.e_star_hat = repetitions == 3 ? zne_linear_full(m.baseline, m.full)
                                    : m.baseline - (m.full - m.baseline) / (repetitions - 1.0);
  lin.eps_hat = (m.full - m.baseline) / (repetitions - 1.0);
  lin.lambda_hat = std::nan("");
  out.push_back(lin);
  const double c = static_cast<double>(repetitions);
  out.push_back(zne_geometric(m.baseline, m.last, m.second_last, c, ZneScheme::GeomAdditive));
  out.push_back(zne_geometric(m.baseline, m.last, m.second_last, c, ZneScheme::GeomMultiplicative));
  return out;
}

}  // namespace dmera
