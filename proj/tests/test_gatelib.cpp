#include <random>

#include "doctest.h"
#include "oracle.hpp"

#include "dmera/gatelib.hpp"

using namespace dmera;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Distance up to a global phase, phase fixed from the largest entry.
double phase_distance(const Matrix& a, const Matrix& b) {
  Eigen::Index r, c;
  b.cwiseAbs().maxCoeff(&r, &c);
  const cplx ph = a(r, c) / b(r, c);
  return max_abs(a - (ph / std::abs(ph)) * b);
}

}  // namespace

TEST_CASE("W and U match the matchgate formulas") {
  for (double t : {0.0, 0.3, -1.1, kPi / 12}) {
    CHECK(max_abs(w_matrix(t) - oracle::w_gate(t)) < 1e-15);
    CHECK(max_abs(u_matrix(t) - oracle::u_gate(t)) < 1e-15);
  }
  const Matrix u = u_matrix(0.7);
  CHECK(max_abs((u.adjoint() * u) - Matrix::Identity(4, 4)) < 1e-14);
  CHECK(std::abs(u(1, 1) - 1.0) < 1e-15);
  CHECK(std::abs(u(2, 2) - 1.0) < 1e-15);
}

TEST_CASE("W maps an incoming |1> to the symmetric pair") {
  Vector in = Vector::Zero(4);
  in(1) = 1.0;  // ancilla |0>, carried |1>
  const Vector out = w_matrix(0.4) * in;
  CHECK(std::abs(out(1) - out(2)) < 1e-15);
  CHECK(std::abs(std::abs(out(1)) - std::sqrt(0.5)) < 1e-15);
}

TEST_CASE("native gates") {
  for (double t : {0.0, 0.2, kPi / 2, -2.3}) {
    CHECK(max_abs(native_gate(NativeKind::XX, t) - oracle::xx_gate(t)) < 1e-15);
    CHECK(max_abs(native_gate(NativeKind::Z, t) - oracle::z_gate(t)) < 1e-15);
  }
  const Matrix h = oracle::hadamard();
  const Matrix hh = oracle::kron(h, h);
  // ZZ is the Hadamard image of XX, X the image of Z
  CHECK(max_abs(native_gate(NativeKind::ZZ, 0.9) - hh * native_gate(NativeKind::XX, 0.9) * hh) < 1e-14);
  CHECK(max_abs(native_gate(NativeKind::X, 0.9) - h * native_gate(NativeKind::Z, 0.9) * h) < 1e-14);
  CHECK(max_abs(native_gate(NativeKind::H) - h) < 1e-15);
}

TEST_CASE("both decompositions reproduce W and U up to phase") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int trial = 0; trial < 25; ++trial) {
    const double t = u(rng);
    for (Variant v : {Variant::C1, Variant::C2}) {
      for (GateKind k : {GateKind::W, GateKind::U}) {
        const GateSequence seq = decompose_gate(k, t, v);
        // independent product of the native gates
        Matrix prod = Matrix::Identity(4, 4);
        for (const auto& g : seq) {
          Matrix m;
          if (g.kind == NativeKind::XX) {
            m = oracle::xx_gate(g.angle);  // symmetric in its qubits
          } else {
            const Matrix z = oracle::z_gate(g.angle);
            m = g.qubits[0] == 0 ? oracle::kron(z, Matrix::Identity(2, 2)) : oracle::kron(Matrix::Identity(2, 2), z);
          }
          prod = m * prod;
        }
        const Matrix target = k == GateKind::W ? oracle::w_gate(t) : oracle::u_gate(t);
        CHECK(phase_distance(prod, target) < 1e-12);
        CHECK_NOTHROW(check_equivalence(seq, target));
      }
    }
  }
}

TEST_CASE("decomposition resources") {
  for (Variant v : {Variant::C1, Variant::C2}) {
    for (GateKind k : {GateKind::W, GateKind::U}) {
      int ms = 0;
      for (const auto& g : decompose_gate(k, 0.3, v)) ms += g.is_ms();
      CHECK(ms == 2);
    }
  }
  // C1 uses fixed pi/2 MS angles
  for (const auto& g : decompose_gate(GateKind::U, 0.3, Variant::C1))
    if (g.is_ms()) CHECK(std::abs(std::abs(g.angle) - kPi / 2) < 1e-15);
}

TEST_CASE("check_equivalence rejects a different gate") {
  const GateSequence seq = decompose_gate(GateKind::U, 0.3, Variant::C1);
  try {
    check_equivalence(seq, oracle::u_gate(0.5));
    FAIL("expected EquivalenceError");
  } catch (const EquivalenceError& e) {
    CHECK(e.deviation() > 0.1);
  }
}

TEST_CASE("variant names") {
  CHECK(parse_variant("C1") == Variant::C1);
  CHECK(parse_variant("C2") == Variant::C2);
  CHECK(to_string(Variant::C2) == "C2");
  CHECK_THROWS_AS(parse_variant("C3"), std::invalid_argument);
}
