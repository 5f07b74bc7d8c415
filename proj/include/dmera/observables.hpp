#pragma once

#include <string>
#include <vector>

#include "dmera/channel.hpp"

namespace dmera {

/// Pauli letters on an ordered support inside an n-qubit window.
struct PauliString {
  std::string letters;    // over I, X, Y, Z
  std::vector<int> sites; // same length as letters

  static PauliString parse(const std::string& letters, int first_site = 0);
  /// Hardware-convention label: X <-> Z swapped.
  PauliString swapped() const;
};

/// Tr(rho P); throws if the imaginary part exceeds 1e-9.
double pauli_expectation(const Matrix& rho, const PauliString& p);
double pauli_expectation(const DensityMatrix& rho, const PauliString& p);

/// Reduced state on `sites` (ascending).
Matrix partial_trace_keep(const Matrix& rho, const std::vector<int>& sites);

/// Energy per site on three qubits: -(<X1X2> + <X2X3>)/2 + <X1 Z2 X3> in the
/// XX convention, letters swapped in the ZZ convention.
double energy_density(const Matrix& rho3, Convention convention = Convention::XX);
/// Average of energy_density over every 3-site window of a wider state.
double window_energy(const Matrix& rho, Convention convention = Convention::XX);

inline constexpr double kExactEnergy = -4.0 / kPi;

enum class InitialState { Psi1, Psi2 };
InitialState parse_initial(const std::string& text);
std::string to_string(InitialState s);

/// Single-qubit amplitudes (hardware ZZ convention).
std::array<double, 2> initial_amplitudes(InitialState which);

/// n-fold product state; in the XX convention the ZZ-convention state is
/// conjugated by H on every qubit.
DensityMatrix initial_state(InitialState which, int n, Convention convention = Convention::XX);

/// Named hardware-convention observables "X", "Z", "ZZ", "ZXZ", "energy",
/// averaged over window positions; evaluated on an XX-convention state.
double named_observable(const Matrix& rho, const std::string& name);
bool is_known_observable(const std::string& name);

}  // namespace dmera
