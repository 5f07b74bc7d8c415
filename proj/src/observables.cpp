#include "dmera/observables.hpp"

#include <cmath>

namespace dmera {

PauliString PauliString::parse(const std::string& letters, int first_site) {
  PauliString p;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const char c = letters[i];
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw std::invalid_argument("bad Pauli letter in '" + letters + "'");
    p.letters.push_back(c);
    p.sites.push_back(first_site + static_cast<int>(i));
  }
  return p;
}

PauliString PauliString::swapped() const {
  PauliString p = *this;
  for (char& c : p.letters) c = c == 'X' ? 'Z' : (c == 'Z' ? 'X' : c);
  return p;
}

double pauli_expectation(const Matrix& rho, const PauliString& p) {
  if (p.letters.size() != p.sites.size()) throw std::invalid_argument("Pauli string letters/sites mismatch");
  const int n = log2_dim(rho.rows());
  // Tr(rho P) = sum_r (P rho)(r, r); P maps |c> to phase * |c ^ flip>.
  std::size_t flip = 0;
  for (std::size_t i = 0; i < p.sites.size(); ++i) {
    const int s = p.sites[i];
    if (s < 0 || s >= n) throw std::invalid_argument("Pauli support outside the window");
    if (p.letters[i] == 'X' || p.letters[i] == 'Y') flip |= std::size_t{1} << (n - 1 - s);
  }
  cplx acc{};
  const std::size_t d = rho.rows();
  for (std::size_t c = 0; c < d; ++c) {
    cplx phase{1.0};
    for (std::size_t i = 0; i < p.sites.size(); ++i) {
      const int bit = (c >> (n - 1 - p.sites[i])) & 1;
      switch (p.letters[i]) {
        case 'Z': phase *= bit ? -1.0 : 1.0; break;
        case 'Y': phase *= bit ? cplx(0, -1) : cplx(0, 1); break;
        default: break;
      }
    }
    acc += phase * rho(c, c ^ flip);
  }
  if (std::abs(acc.imag()) > 1e-9) throw InvariantError("Pauli expectation has imaginary part " + std::to_string(acc.imag()));
  return acc.real();
}

double pauli_expectation(const DensityMatrix& rho, const PauliString& p) { return pauli_expectation(rho.matrix(), p); }

Matrix partial_trace_keep(const Matrix& rho, const std::vector<int>& sites) {
  const int n = log2_dim(rho.rows());
  const int k = static_cast<int>(sites.size());
  std::vector<int> rest;
  for (int q = 0; q < n; ++q)
    if (std::find(sites.begin(), sites.end(), q) == sites.end()) rest.push_back(q);
  auto compose = [&](std::size_t kept, std::size_t traced) {
    std::size_t idx = 0;
    for (int i = 0; i < k; ++i) idx |= ((kept >> (k - 1 - i)) & 1) << (n - 1 - sites[i]);
    const int m = static_cast<int>(rest.size());
    for (int i = 0; i < m; ++i) idx |= ((traced >> (m - 1 - i)) & 1) << (n - 1 - rest[i]);
    return idx;
  };
  const std::size_t dk = std::size_t{1} << k, dr = std::size_t{1} << rest.size();
  Matrix out = Matrix::Zero(dk, dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b)
      for (std::size_t t = 0; t < dr; ++t) out(a, b) += rho(compose(a, t), compose(b, t));
  return out;
}

double energy_density(const Matrix& rho3, Convention convention) {
  if (rho3.rows() != 8) throw std::invalid_argument("energy_density needs a 3-qubit state");
  auto term = [&](const char* letters) {
    PauliString p = PauliString::parse(letters);
    if (convention == Convention::ZZ) p = p.swapped();
    return pauli_expectation(rho3, p);
  };
  return -(term("XXI") + term("IXX")) / 2.0 + term("XZX");
}

double window_energy(const Matrix& rho, Convention convention) {
  const int n = log2_dim(rho.rows());
  if (n < 3) throw std::invalid_argument("window_energy needs at least 3 qubits");
  if (n == 3) return energy_density(rho, convention);
  double sum = 0.0;
  for (int s = 0; s + 3 <= n; ++s) sum += energy_density(partial_trace_keep(rho, {s, s + 1, s + 2}), convention);
  return sum / (n - 2);
}

InitialState parse_initial(const std::string& text) {
  if (text == "psi1") return InitialState::Psi1;
  if (text == "psi2") return InitialState::Psi2;
  throw std::invalid_argument("unknown initial state '" + text + "' (expected psi1|psi2)");
}

std::string to_string(InitialState s) { return s == InitialState::Psi1 ? "psi1" : "psi2"; }

std::array<double, 2> initial_amplitudes(InitialState which) {
  const double r2 = std::sqrt(2.0);
  const double big = std::sqrt((3.0 + 2.0 * r2) / 6.0), small = std::sqrt((3.0 - 2.0 * r2) / 6.0);
  if (which == InitialState::Psi1) return {big, -small};
  return {small, big};
}

DensityMatrix initial_state(InitialState which, int n, Convention convention) {
  if (n < 1) throw std::invalid_argument("initial_state needs n >= 1");
  const auto amp = initial_amplitudes(which);
  Vector psi(2);
  psi << amp[0], amp[1];
  if (convention == Convention::XX) psi = native_gate(NativeKind::H) * psi;
  const Matrix one = psi * psi.adjoint();
  Matrix rho = one;
  for (int i = 1; i < n; ++i) rho = kron(rho, one);
  return DensityMatrix(rho);
}

bool is_known_observable(const std::string& name) {
  return name == "X" || name == "Z" || name == "ZZ" || name == "ZXZ" || name == "energy";
}

double named_observable(const Matrix& rho, const std::string& name) {
  if (name == "energy") return window_energy(rho, Convention::XX);
  if (!is_known_observable(name)) throw std::invalid_argument("unknown observable '" + name + "' (expected X|Z|ZZ|ZXZ|energy)");
  const int n = log2_dim(rho.rows());
  const int len = static_cast<int>(name.size());
  double sum = 0.0;
  for (int s = 0; s + len <= n; ++s) sum += pauli_expectation(rho, PauliString::parse(name, s).swapped());
  return sum / (n - len + 1);
}

}  // namespace dmera
