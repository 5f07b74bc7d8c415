#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dmera/engine.hpp"
#include "dmera/layout.hpp"
#include "dmera/noise.hpp"

namespace dmera {

/// Hermitian, unit-trace, PSD operator on n qubits.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  /// Validates with tolerance `tol` (Hermiticity, trace, min eigenvalue).
  explicit DensityMatrix(Matrix m, double tol = 1e-10);

  static DensityMatrix maximally_mixed(int n_qubits);

  int n_qubits() const { return log2_dim(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Linear map on column-stacked operators: vec(rho)[c * d + r] = rho(r, c).
struct Superoperator {
  int n_qubits = 0;
  Matrix matrix;

  static Superoperator identity(int n_qubits);
  static Superoperator from_kraus(const std::vector<Matrix>& kraus);
};

Vector vectorize(const Matrix& op);
Matrix unvectorize(const Vector& v);

/// Physical options for assembling one layer.
struct ChannelOptions {
  NoiseModel noise = Noiseless{};
  /// Each MS gate XX(t) becomes XX(t)[XX(-t)XX(t)]^((r-1)/2); r odd.
  int repetitions = 1;
};

/// A closed n-qubit channel: a weighted sum of register programs, or a dense
/// superoperator.
class Channel {
 public:
  Channel() = default;
  Channel(int n_qubits, std::vector<std::pair<double, ChannelProgram>> branches);
  explicit Channel(Superoperator s);

  int n_qubits() const { return n_; }
  /// Largest live register over all branches (0 for dense channels).
  int peak_qubits() const;

  /// Applies the map to an arbitrary operator (no re-Hermitization).
  Matrix apply(const Matrix& op) const;
  /// Dense superoperator; throws for n > 6.
  Superoperator superoperator() const;

  /// Equal-weight mixture.
  static Channel mixture(const Channel& a, const Channel& b);

 private:
  int n_ = 0;
  std::vector<std::pair<double, ChannelProgram>> branches_;
  std::optional<Superoperator> dense_;
};

/// Register program for one cone: lazy ancilla preparation, early discards,
/// noise attached to every MS gate.
ChannelProgram compile_cone(const LayerCircuit& cone, const ChannelOptions& options);

/// Channel for a closed causal cone.
Channel assemble_channel(const LayerCircuit& cone, const ChannelOptions& options = {});
Superoperator assemble_superoperator(const LayerCircuit& cone, const NoiseModel& noise = Noiseless{});

enum class ChannelKind { Left, Right, Mixture };
ChannelKind parse_channel_kind(const std::string& text);
std::string to_string(ChannelKind kind);

/// The depth-D layer channel on channel_width(D) qubits.
Channel layer_channel(const AngleProfile& profile, ChannelKind kind = ChannelKind::Mixture,
                      const ChannelOptions& options = {}, Convention convention = Convention::XX);

/// S applied to rho, re-Hermitized and validated.
DensityMatrix apply_channel(const Superoperator& s, const DensityMatrix& rho);
DensityMatrix apply_channel(const Channel& channel, const DensityMatrix& rho);

Superoperator mixture_channel(const Superoperator& left, const Superoperator& right);

struct CptpReport {
  double tp_residual = 0.0;
  double choi_min_eigenvalue = 0.0;
  double max_abs_eigenvalue = 0.0;
  bool pass = false;
};

CptpReport verify_cptp(const Superoperator& s);

}  // namespace dmera
