#pragma once

#include <vector>

#include "dmera/types.hpp"

namespace dmera {

// Register-level execution of a channel on an operator. Qubits carry integer
// labels; the register tracks which labels are live and in what order.

struct ProgramOp {
  // Superop1: 4x4 transfer matrix on one qubit in the basis |row col>.
  // FlipXX: rho -> (1-p) rho + p (X⊗X) rho (X⊗X) on two qubits.
  enum class Type { Prep, Kraus, Discard, Superop1, FlipXX };
  Type type = Type::Kraus;
  std::vector<int> labels;     // 1 or 2 labels (Prep/Discard/Superop1: exactly 1)
  std::vector<Matrix> kraus;   // one entry means a unitary
  Matrix prep;                 // 2x2 density for Prep, 4x4 transfer matrix for Superop1
  double p = 0.0;              // FlipXX probability
};

/// 4x4 transfer matrix of a single-qubit Kraus set, basis |row col>.
Matrix single_qubit_transfer(const std::vector<Matrix>& kraus);

struct ChannelProgram {
  int n_in = 0;
  int n_out = 0;
  std::vector<int> input_labels;   // label of input slot i, -1 = traced out immediately
  std::vector<ProgramOp> ops;
  std::vector<int> output_labels;  // output order
};

/// Applies `program` to an operator on n_in qubits (row-major Eigen matrix or not).
Matrix run_program(const ChannelProgram& program, const Matrix& op);

/// Largest number of simultaneously live qubits while running `program`.
int peak_live_qubits(const ChannelProgram& program);

namespace kernels {

/// Applies a 2x2 matrix to bit `bit` of a 2^total_bits vector.
void apply_1q(cplx* data, int total_bits, int bit, const cplx* m);
/// Applies a 4x4 matrix (basis |b0 b1>) to bits (bit0, bit1).
void apply_2q(cplx* data, int total_bits, int bit0, int bit1, const cplx* m);

}  // namespace kernels

}  // namespace dmera
