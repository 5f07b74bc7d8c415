#include "dmera/gatelib.hpp"

#include <cmath>
#include <sstream>

namespace dmera {

namespace {
constexpr double kHalfPi = kPi / 2.0;
const cplx kI{0.0, 1.0};
}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix pauli(char letter) {
  Matrix p = Matrix::Zero(2, 2);
  switch (letter) {
    case 'I': p(0, 0) = 1.0; p(1, 1) = 1.0; break;
    case 'X': p(0, 1) = 1.0; p(1, 0) = 1.0; break;
    case 'Y': p(0, 1) = -kI; p(1, 0) = kI; break;
    case 'Z': p(0, 0) = 1.0; p(1, 1) = -1.0; break;
    default: throw std::invalid_argument(std::string("unknown Pauli letter '") + letter + "'");
  }
  return p;
}

Matrix w_matrix(double theta) {
  const double c = std::cos(theta - kPi / 4.0);
  const double s = std::sin(theta - kPi / 4.0);
  const double r = 1.0 / std::sqrt(2.0);
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = c;  m(0, 3) = s;
  m(1, 1) = r;  m(1, 2) = -r;
  m(2, 1) = r;  m(2, 2) = r;
  m(3, 0) = -s; m(3, 3) = c;
  return m;
}

Matrix u_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix m = Matrix::Identity(4, 4);
  m(0, 0) = c;  m(0, 3) = s;
  m(3, 0) = -s; m(3, 3) = c;
  return m;
}

Matrix gate_matrix(GateKind kind, double theta) {
  return kind == GateKind::W ? w_matrix(theta) : u_matrix(theta);
}

Matrix native_gate(NativeKind kind, double angle) {
  if (kind != NativeKind::H && !std::isfinite(angle)) throw std::invalid_argument("native gate angle must be finite");
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (kind) {
    case NativeKind::XX: {
      // cos(t/2) I - i sin(t/2) X⊗X; X⊗X is the anti-diagonal.
      Matrix m = c * Matrix::Identity(4, 4);
      for (int k = 0; k < 4; ++k) m(k, 3 - k) += -kI * s;
      return m;
    }
    case NativeKind::ZZ: {
      Matrix m = Matrix::Zero(4, 4);
      const cplx even = std::exp(-kI * (angle / 2.0));
      const cplx odd = std::exp(kI * (angle / 2.0));
      m(0, 0) = even; m(1, 1) = odd; m(2, 2) = odd; m(3, 3) = even;
      return m;
    }
    case NativeKind::Z: {
      Matrix m = Matrix::Zero(2, 2);
      m(0, 0) = std::exp(kI * (angle / 2.0));
      m(1, 1) = std::exp(-kI * (angle / 2.0));
      return m;
    }
    case NativeKind::X: {
      Matrix m(2, 2);
      m << c, kI * s, kI * s, c;
      return m;
    }
    case NativeKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      Matrix m(2, 2);
      m << r, r, r, -r;
      return m;
    }
  }
  throw std::invalid_argument("unknown native gate kind");
}

GateSequence decompose_gate(GateKind kind, double theta, Variant variant) {
  // The second-listed qubit of the published sequences is the gate's local
  // qubit 0 (the W ancilla); the first-listed is local qubit 1.
  using K = NativeKind;
  const double last = kind == GateKind::W ? theta - kHalfPi : theta;
  if (variant == Variant::C1) {
    return {
        {K::XX, kHalfPi, {0, 1}},
        {K::Z, theta, {1, -1}},
        {K::Z, last, {0, -1}},
        {K::XX, -kHalfPi, {0, 1}},
    };
  }
  // C2: the Z conjugation of the second MS gate runs -pi/2 then +pi/2; the
  // opposite ordering rotates the odd-parity block instead.
  return {
      {K::Z, kHalfPi, {1, -1}},
      {K::XX, -theta, {0, 1}},
      {K::Z, -kHalfPi, {1, -1}},
      {K::Z, -kHalfPi, {0, -1}},
      {K::XX, last, {0, 1}},
      {K::Z, kHalfPi, {0, -1}},
  };
}

Matrix embed(const Matrix& gate, const std::vector<int>& qubits, int n_qubits) {
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  const int k = static_cast<int>(qubits.size());
  if (gate.rows() != (Eigen::Index{1} << k)) throw std::invalid_argument("embed: gate size does not match qubit count");
  for (int q : qubits)
    if (q < 0 || q >= n_qubits) throw std::invalid_argument("embed: qubit index out of range");
  Matrix out = Matrix::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    int in_sub = 0;
    for (int t = 0; t < k; ++t) in_sub = (in_sub << 1) | static_cast<int>((col >> (n_qubits - 1 - qubits[t])) & 1);
    for (int out_sub = 0; out_sub < (1 << k); ++out_sub) {
      const cplx amp = gate(out_sub, in_sub);
      if (amp == cplx{}) continue;
      Eigen::Index row = col;
      for (int t = 0; t < k; ++t) {
        const Eigen::Index bit = Eigen::Index{1} << (n_qubits - 1 - qubits[t]);
        const bool set = (out_sub >> (k - 1 - t)) & 1;
        row = set ? (row | bit) : (row & ~bit);
      }
      out(row, col) += amp;
    }
  }
  return out;
}

Matrix sequence_matrix(const GateSequence& seq, int n_qubits) {
  Matrix total = Matrix::Identity(Eigen::Index{1} << n_qubits, Eigen::Index{1} << n_qubits);
  for (const auto& g : seq) {
    std::vector<int> qs{g.qubits[0]};
    if (g.arity() == 2) qs.push_back(g.qubits[1]);
    total = embed(native_gate(g.kind, g.angle), qs, n_qubits) * total;
  }
  return total;
}

double check_equivalence(const GateSequence& seq, const Matrix& target, double tol) {
  if (target.rows() != target.cols() || !is_power_of_two(target.rows()))
    throw std::invalid_argument("check_equivalence: target must be a square 2^n matrix");
  const int n = log2_dim(target.rows());
  for (const auto& g : seq) {
    const int max_q = g.arity() == 2 ? std::max(g.qubits[0], g.qubits[1]) : g.qubits[0];
    if (max_q >= n) throw std::invalid_argument("check_equivalence: sequence touches qubits outside the target");
  }
  const Matrix product = sequence_matrix(seq, n);
  Eigen::Index r = 0, c = 0;
  target.cwiseAbs().maxCoeff(&r, &c);
  const cplx ratio = product(r, c) / target(r, c);
  const double phi = std::arg(ratio);
  const double deviation = (product - std::exp(cplx{0.0, phi}) * target).cwiseAbs().maxCoeff();
  if (!(deviation < tol)) {
    std::ostringstream os;
    os << "gate sequence differs from target beyond global phase (max deviation " << deviation << ")";
    throw EquivalenceError(os.str(), deviation);
  }
  return phi;
}

std::string to_string(NativeKind kind) {
  switch (kind) {
    case NativeKind::XX: return "XX";
    case NativeKind::ZZ: return "ZZ";
    case NativeKind::Z: return "Z";
    case NativeKind::X: return "X";
    case NativeKind::H: return "H";
  }
  return "?";
}

std::string to_string(Variant variant) { return variant == Variant::C1 ? "C1" : "C2"; }

Variant parse_variant(const std::string& text) {
  if (text == "C1" || text == "c1") return Variant::C1;
  if (text == "C2" || text == "c2") return Variant::C2;
  throw std::invalid_argument("unknown decomposition variant '" + text + "' (expected C1 or C2)");
}

}  // namespace dmera
