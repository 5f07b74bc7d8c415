#pragma once

#include <array>
#include <string>
#include <vector>

#include "dmera/gatelib.hpp"

namespace dmera {

/// One scale transformation: theta[0] drives the W sublayer, theta[1..] the
/// successive U sublayers.
struct AngleProfile {
  int depth = 2;
  std::vector<double> thetas;
  Variant variant = Variant::C1;

  void validate() const;
  std::string to_json() const;
  static AngleProfile from_json(const std::string& text);
  static AngleProfile load(const std::string& path);
};

enum class Side { Left, Right };

/// XX: simulation convention (|0> ancillas, XX gates, Z rotations).
/// ZZ: hardware convention, the image of XX under conjugation of every line by H.
enum class Convention { XX, ZZ };

struct LayerGate {
  GateKind kind;
  double theta;
  std::array<int, 2> qubits;  // W: qubits[0] is the fresh ancilla
};

/// Gates and bookkeeping for one (possibly pruned) layer. Qubit indices are
/// local and ordered by lattice position.
struct LayerCircuit {
  int n_total = 0;
  int n_in = 0;                     // width of the coarse input window
  std::vector<int> carried;         // local qubits fed from the input, in input order
  std::vector<int> input_index;     // input slot of carried[i]
  std::vector<int> prep;            // fresh ancillas
  std::vector<LayerGate> gates;     // time order
  std::vector<int> output_window;   // contiguous, left to right
  std::vector<int> discard;
  Variant variant = Variant::C1;
  Convention convention = Convention::XX;
  int first_site = 0;               // lattice position of local qubit 0

  /// True when the number of input slots equals the output width.
  bool closed() const { return n_in == static_cast<int>(output_window.size()); }
  void validate() const;
};

/// Full layer on `width` fine sites with open boundaries: ancillas on even
/// sites, carried qubits on odd sites.
LayerCircuit build_scale_layer(const AngleProfile& profile, int width);

/// Past causal cone of an n_out-site output window. Left windows start on a
/// carried (odd) site, Right windows on an ancilla (even) site. When the cone
/// fits in an n_out-site input window centred under the output, n_in = n_out.
LayerCircuit causal_cone(const AngleProfile& profile, int n_out, Side side);

/// Smallest width on which both Left and Right cones close.
int channel_width(int depth);

/// Backward pruning of `full` onto `window` (lattice positions of `full`).
LayerCircuit prune_to_window(const LayerCircuit& full, const std::vector<int>& window);

/// Spatial reflection q -> n_total-1-q of every index.
LayerCircuit mirror(const LayerCircuit& circuit);

/// Toggles between the XX and ZZ conventions.
LayerCircuit swap_convention(const LayerCircuit& circuit);

struct GateCounts {
  long ms_gates = 0;
  long single_qubit_gates = 0;
  long resets = 0;
  bool operator==(const GateCounts&) const = default;
};

/// Native resources for n_layers applications of the n_out-site channel.
/// Single-qubit gates include one Hadamard per fresh ancilla (|+> preparation
/// on hardware); resets exclude the first layer's fresh qubits.
GateCounts gate_counts(const AngleProfile& profile, int n_out, int n_layers);

}  // namespace dmera
