#pragma once

#include <array>
#include <string>
#include <vector>

#include "dmera/types.hpp"

namespace dmera {

// Gate matrices use the basis |q0 q1>, qubit 0 is the most significant factor.

enum class GateKind { W, U };
enum class Variant { C1, C2 };

/// Native trapped-ion operations. X is the image of Z under the hardware
/// convention swap and never appears in the XX convention.
enum class NativeKind { XX, ZZ, Z, X, H };

struct NativeGate {
  NativeKind kind;
  double angle = 0.0;           // radians, ignored for H
  std::array<int, 2> qubits{0, -1};  // second entry unused for 1-qubit kinds

  int arity() const { return (kind == NativeKind::XX || kind == NativeKind::ZZ) ? 2 : 1; }
  bool is_ms() const { return arity() == 2; }
};

using GateSequence = std::vector<NativeGate>;

/// Thrown by check_equivalence; carries the smallest achievable max-abs deviation.
class EquivalenceError : public Error {
 public:
  EquivalenceError(const std::string& what, double deviation) : Error(what), deviation_(deviation) {}
  double deviation() const { return deviation_; }

 private:
  double deviation_;
};

/// Isometry gate. Even-parity block rotates by theta - pi/4, odd block is the
/// fixed symmetric mixer. Local qubit 0 is the fresh ancilla.
Matrix w_matrix(double theta);
/// Matchgate with a rotation by theta on the even block and identity on the odd block.
Matrix u_matrix(double theta);
Matrix gate_matrix(GateKind kind, double theta);

/// XX(t) = exp(-i t/2 X⊗X), ZZ(t) = exp(-i t/2 Z⊗Z), Z(p) = exp(i p/2 Z),
/// X(p) = exp(i p/2 X), H = Hadamard.
Matrix native_gate(NativeKind kind, double angle = 0.0);

/// Native-gate decomposition of W or U, listed in time order.
GateSequence decompose_gate(GateKind kind, double theta, Variant variant);

/// Unitary implemented by `seq` on `n_qubits` qubits (time order).
Matrix sequence_matrix(const GateSequence& seq, int n_qubits);

/// Returns phi such that product(seq) = exp(i phi) * target within `tol`
/// (max-abs entrywise); throws EquivalenceError otherwise.
double check_equivalence(const GateSequence& seq, const Matrix& target, double tol = 1e-10);

std::string to_string(NativeKind kind);
std::string to_string(Variant variant);
Variant parse_variant(const std::string& text);

/// Embeds a 1- or 2-qubit matrix acting on `qubits` into an n-qubit operator.
Matrix embed(const Matrix& gate, const std::vector<int>& qubits, int n_qubits);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix pauli(char letter);

}  // namespace dmera
