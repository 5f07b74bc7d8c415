#include "dmera/noise.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "dmera/gatelib.hpp"

namespace dmera {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void grammar_error(const std::string& spec, const std::string& why) {
  throw std::invalid_argument("invalid noise spec '" + spec + "': " + why + "; expected " + kNoiseGrammar);
}

double parse_number(const std::string& spec, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) grammar_error(spec, "bad number '" + text + "'");
  return v;
}

}  // namespace

void validate(const NoiseModel& model) {
  std::visit(overloaded{
                 [](const Noiseless&) {},
                 [](const AngleImprecision& m) {
                   if (!(m.sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
                 },
                 [](const AngleProportional& m) {
                   if (!(m.sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
                 },
                 [](const Depolarizing& m) {
                   if (!(m.p >= 0.0 && m.p <= 1.0)) throw std::invalid_argument("depolarizing p must lie in [0, 1]");
                   double sum = 0.0;
                   for (double b : m.bias) {
                     if (!(b >= 0.0)) throw std::invalid_argument("bias weights must be nonnegative");
                     sum += b;
                   }
                   if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("bias weights must sum to 1");
                 },
             },
             model);
}

bool is_noiseless(const NoiseModel& model) {
  return std::visit(overloaded{
                        [](const Noiseless&) { return true; },
                        [](const AngleImprecision& m) { return m.sigma2 == 0.0; },
                        [](const AngleProportional& m) { return m.sigma2 == 0.0; },
                        [](const Depolarizing& m) { return m.p == 0.0; },
                    },
                    model);
}

NoiseModel parse_noise(const std::string& spec) {
  if (spec == "noiseless") return Noiseless{};
  const auto colon = spec.find(':');
  if (colon == std::string::npos) grammar_error(spec, "missing ':'");
  const std::string family = spec.substr(0, colon);
  std::string rest = spec.substr(colon + 1);

  std::vector<std::pair<std::string, std::string>> fields;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) grammar_error(spec, "field '" + item + "' lacks '='");
    fields.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  NoiseModel model;
  if (family == "imprecision" || family == "proportional") {
    if (fields.size() != 1 || fields[0].first != "sigma2") grammar_error(spec, "expected exactly sigma2=<f>");
    const double s2 = parse_number(spec, fields[0].second);
    model = family == "imprecision" ? NoiseModel{AngleImprecision{s2}} : NoiseModel{AngleProportional{s2}};
  } else if (family == "depolarizing") {
    Depolarizing d;
    bool have_p = false;
    for (const auto& [key, value] : fields) {
      if (key == "p") {
        d.p = parse_number(spec, value);
        have_p = true;
      } else if (key == "bias") {
        if (value == "x") d.bias = {1.0, 0.0, 0.0};
        else if (value == "y") d.bias = {0.0, 1.0, 0.0};
        else if (value == "z") d.bias = {0.0, 0.0, 1.0};
        else if (value == "iso") d.bias = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        else grammar_error(spec, "unknown bias '" + value + "'");
      } else {
        grammar_error(spec, "unknown field '" + key + "'");
      }
    }
    if (!have_p) grammar_error(spec, "missing p=<f>");
    model = d;
  } else {
    grammar_error(spec, "unknown family '" + family + "'");
  }
  try {
    validate(model);
  } catch (const std::invalid_argument& e) {
    grammar_error(spec, e.what());
  }
  return model;
}

std::string to_string(const NoiseModel& model) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const Noiseless&) { os << "noiseless"; },
                 [&](const AngleImprecision& m) { os << "imprecision:sigma2=" << m.sigma2; },
                 [&](const AngleProportional& m) { os << "proportional:sigma2=" << m.sigma2; },
                 [&](const Depolarizing& m) {
                   os << "depolarizing:p=" << m.p;
                   if (m.bias == std::array<double, 3>{1.0, 0.0, 0.0}) os << ",bias=x";
                   else if (m.bias == std::array<double, 3>{0.0, 1.0, 0.0}) os << ",bias=y";
                   else if (m.bias == std::array<double, 3>{0.0, 0.0, 1.0}) os << ",bias=z";
                 },
             },
             model);
  return os.str();
}

NoiseModel with_strength(const NoiseModel& family, double eps) {
  return std::visit(overloaded{
                        [&](const Noiseless&) -> NoiseModel { return AngleImprecision{eps}; },
                        [&](const AngleImprecision&) -> NoiseModel { return AngleImprecision{eps}; },
                        [&](const AngleProportional&) -> NoiseModel { return AngleProportional{eps}; },
                        [&](const Depolarizing& m) -> NoiseModel { return Depolarizing{eps, m.bias}; },
                    },
                    family);
}

double flip_probability(double sigma2) { return -std::expm1(-sigma2 / 2.0) / 2.0; }

KrausSet noisy_ms_kraus(double theta, const NoiseModel& model) {
  validate(model);
  double sigma2 = 0.0;
  if (const auto* m = std::get_if<AngleImprecision>(&model)) {
    sigma2 = m->sigma2;
  } else if (const auto* m = std::get_if<AngleProportional>(&model)) {
    sigma2 = m->sigma2 * std::abs(theta) / (kPi / 2.0);
  } else if (std::holds_alternative<Depolarizing>(model)) {
    throw std::invalid_argument("depolarizing noise is attached around MS gates, not as MS Kraus operators");
  }
  if (sigma2 == 0.0) return {native_gate(NativeKind::XX, theta)};
  const double q = flip_probability(sigma2);
  return {std::sqrt(1.0 - q) * native_gate(NativeKind::XX, theta), std::sqrt(q) * native_gate(NativeKind::XX, theta - kPi)};
}

KrausSet depolarize_kraus(double p, const std::array<double, 3>& bias) {
  validate(Depolarizing{p, bias});
  KrausSet out;
  out.push_back(std::sqrt(1.0 - p) * pauli('I'));
  const char letters[3] = {'X', 'Y', 'Z'};
  for (int i = 0; i < 3; ++i)
    if (p * bias[i] > 0.0) out.push_back(std::sqrt(p * bias[i]) * pauli(letters[i]));
  return out;
}

double completeness_residual(const KrausSet& kraus) {
  if (kraus.empty()) return 1.0;
  Matrix sum = Matrix::Zero(kraus[0].cols(), kraus[0].cols());
  for (const auto& k : kraus) sum += k.adjoint() * k;
  return (sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
}

}  // namespace dmera
