#include <random>

#include "doctest.h"
#include "oracle.hpp"

#include "dmera/channel.hpp"
#include "dmera/noise.hpp"

using namespace dmera;

namespace {

AngleProfile profile(int depth, Variant v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  AngleProfile p;
  p.depth = depth;
  p.variant = v;
  for (int i = 0; i < depth; ++i) p.thetas.push_back(u(rng));
  return p;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
  Matrix r = a * a.adjoint();
  return r / r.trace();
}

// A one-gate "layer" on two carried qubits, both kept.
LayerCircuit single_gate(GateKind kind, double theta, Variant v) {
  LayerCircuit c;
  c.n_total = 2;
  c.n_in = 2;
  c.carried = {0, 1};
  c.input_index = {0, 1};
  c.gates = {{kind, theta, {0, 1}}};
  c.output_window = {0, 1};
  c.variant = v;
  return c;
}

Matrix conj(const Matrix& g, const Matrix& rho) { return g * rho * g.adjoint(); }

// Dense density-matrix oracle of a noisy native sequence on two qubits.
Matrix noisy_sequence(const GateSequence& seq, const Matrix& rho_in, const NoiseModel& noise) {
  const Matrix id = Matrix::Identity(2, 2);
  Matrix rho = rho_in;
  auto depol = [&](double p, const std::array<double, 3>& bias) {
    const Matrix ps[3] = {pauli('X'), pauli('Y'), pauli('Z')};
    for (int q = 0; q < 2; ++q) {
      Matrix out = (1 - p / 2) * rho;
      for (int k = 0; k < 3; ++k) {
        const Matrix pk = q == 0 ? oracle::kron(ps[k], id) : oracle::kron(id, ps[k]);
        out += (p / 2) * bias[k] * conj(pk, rho);
      }
      rho = out;
    }
  };
  Matrix xx = Matrix::Zero(4, 4);
  xx(0, 3) = xx(3, 0) = xx(1, 2) = xx(2, 1) = 1;
  for (const auto& g : seq) {
    if (g.kind == NativeKind::Z) {
      const Matrix z = oracle::z_gate(g.angle);
      rho = conj(g.qubits[0] == 0 ? oracle::kron(z, id) : oracle::kron(id, z), rho);
      continue;
    }
    if (auto* d = std::get_if<Depolarizing>(&noise)) depol(d->p, d->bias);
    rho = conj(oracle::xx_gate(g.angle), rho);
    double s2 = 0.0;
    if (auto* a = std::get_if<AngleImprecision>(&noise)) s2 = a->sigma2;
    if (auto* a = std::get_if<AngleProportional>(&noise)) s2 = a->sigma2 * std::abs(g.angle) / (kPi / 2);
    const double q = (1 - std::exp(-s2 / 2)) / 2;
    rho = (1 - q) * rho + q * conj(xx, rho);
    if (auto* d = std::get_if<Depolarizing>(&noise)) depol(d->p, d->bias);
  }
  return rho;
}

}  // namespace

TEST_CASE("noise spec grammar") {
  CHECK(std::holds_alternative<Noiseless>(parse_noise("noiseless")));
  CHECK(std::get<AngleImprecision>(parse_noise("imprecision:sigma2=0.001")).sigma2 == doctest::Approx(1e-3));
  CHECK(std::get<AngleProportional>(parse_noise("proportional:sigma2=0.5")).sigma2 == doctest::Approx(0.5));
  const auto d = std::get<Depolarizing>(parse_noise("depolarizing:p=0.01,bias=z"));
  CHECK(d.p == doctest::Approx(0.01));
  CHECK(d.bias[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_noise("bogus:x=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_noise("imprecision:sigma2=-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_noise("depolarizing:p=2"), std::invalid_argument);
  for (const char* s : {"noiseless", "imprecision:sigma2=0.25", "depolarizing:p=0.001,bias=x"})
    CHECK(to_string(parse_noise(to_string(parse_noise(s)))) == to_string(parse_noise(s)));
}

TEST_CASE("noisy MS Kraus set equals the Gaussian angle average") {
  std::mt19937_64 rng(2);
  const Matrix rho = random_density(2, rng);
  for (double s2 : {1e-3, 0.05, 0.4}) {
    const double theta = 0.7;
    const double sigma = std::sqrt(s2);
    // trapezoid rule on +-10 sigma
    Matrix avg = Matrix::Zero(4, 4);
    const int n = 4001;
    const double h = 20 * sigma / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double x = -10 * sigma + i * h;
      const double w = std::exp(-x * x / (2 * s2)) / std::sqrt(2 * kPi * s2) * h * ((i == 0 || i == n - 1) ? 0.5 : 1);
      avg += w * conj(oracle::xx_gate(theta + x), rho);
    }
    Matrix kr = Matrix::Zero(4, 4);
    const KrausSet ks = noisy_ms_kraus(theta, AngleImprecision{s2});
    CHECK(completeness_residual(ks) < 1e-14);
    for (const auto& k : ks) kr += conj(k, rho);
    CHECK(max_abs(avg - kr) < 1e-10);
  }
  CHECK(flip_probability(0.0) == 0.0);
  CHECK(flip_probability(1e-4) == doctest::Approx(1e-4 / 4).epsilon(1e-4));
}

TEST_CASE("depolarizing Kraus sets") {
  CHECK(completeness_residual(depolarize_kraus(0.1)) < 1e-15);
  CHECK(depolarize_kraus(0.1, {0.0, 0.0, 1.0}).size() == 2);
  CHECK(completeness_residual(depolarize_kraus(0.3, {0.0, 0.0, 1.0})) < 1e-15);
}

TEST_CASE("vectorization and superoperator basics") {
  std::mt19937_64 rng(4);
  const Matrix r = random_density(2, rng);
  CHECK(max_abs(unvectorize(vectorize(r)) - r) == 0.0);
  CHECK(vectorize(r)(1) == r(1, 0));
  const Superoperator id = Superoperator::identity(2);
  CHECK(max_abs(unvectorize(id.matrix * vectorize(r)) - r) == 0.0);
  const Matrix u = oracle::xx_gate(0.3);
  const Superoperator s = Superoperator::from_kraus({u});
  CHECK(max_abs(unvectorize(s.matrix * vectorize(r)) - conj(u, r)) < 1e-14);
}

TEST_CASE("density matrix validation") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.2;
  m(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix{m}, InvariantError);
  m(0, 0) = 0.5;
  m(1, 1) = 0.4;
  CHECK_THROWS_AS(DensityMatrix{m}, InvariantError);
  CHECK(DensityMatrix::maximally_mixed(3).matrix().trace().real() == doctest::Approx(1.0));
}

TEST_CASE("noisy single-gate programs match the dense oracle") {
  std::mt19937_64 rng(8);
  const std::vector<NoiseModel> models{Noiseless{}, AngleImprecision{0.03}, AngleProportional{0.2},
                                       Depolarizing{0.01, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
                                       Depolarizing{0.02, {0.0, 0.0, 1.0}}};
  for (Variant v : {Variant::C1, Variant::C2}) {
    for (GateKind k : {GateKind::W, GateKind::U}) {
      const LayerCircuit c = single_gate(k, 0.37, v);
      for (const auto& noise : models) {
        const Matrix rho = random_density(2, rng);
        const Matrix ref = noisy_sequence(decompose_gate(k, 0.37, v), rho, noise);
        const Channel ch = assemble_channel(c, ChannelOptions{noise, 1});
        CHECK(max_abs(ch.apply(rho) - ref) < 1e-13);
      }
    }
  }
}

TEST_CASE("noiseless layer channels match the exact cone") {
  std::mt19937_64 rng(9);
  for (int d = 2; d <= 4; ++d) {
    const AngleProfile p = profile(d, Variant::C1, 20 + d);
    for (Side s : {Side::Left, Side::Right}) {
      const LayerCircuit cone = causal_cone(p, channel_width(d), s);
      const Channel ch = assemble_channel(cone);
      CHECK(ch.peak_qubits() <= 2 * d);
      for (int trial = 0; trial < 2; ++trial) {
        const oracle::Vec in = oracle::random_state(cone.n_in, rng);
        const Matrix out = ch.apply(in * in.adjoint());
        CHECK(max_abs(out - oracle::cone_output(cone, in)) < 1e-12);
      }
    }
  }
}

// Every pattern of correlated flips after the MS gates, weighted exactly.
TEST_CASE("imprecision noise equals the enumerated flip trajectories") {
  std::mt19937_64 rng(10);
  const AngleProfile p = profile(2, Variant::C1, 31);
  const LayerCircuit cone = causal_cone(p, 3, Side::Left);
  const int m = oracle::ms_count(cone);
  REQUIRE(m <= 14);
  const double s2 = 0.2;
  const double q = (1 - std::exp(-s2 / 2)) / 2;
  const oracle::Vec in = oracle::random_state(3, rng);
  Matrix ref = Matrix::Zero(8, 8);
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<bool> flips(m);
    double w = 1.0;
    for (int i = 0; i < m; ++i) {
      flips[i] = (mask >> i) & 1;
      w *= flips[i] ? q : 1 - q;
    }
    oracle::Vec psi = oracle::embed_input(cone, in);
    oracle::run_native(cone, psi, flips);
    ref += w * oracle::reduce(psi, cone.output_window, cone.n_total);
  }
  const Channel ch = assemble_channel(cone, ChannelOptions{AngleImprecision{s2}, 1});
  CHECK(max_abs(ch.apply(in * in.adjoint()) - ref) < 1e-12);
}

TEST_CASE("sampled Gaussian angles approach the Kraus channel") {
  std::mt19937_64 rng(12);
  const AngleProfile p = profile(2, Variant::C2, 32);
  const LayerCircuit cone = causal_cone(p, 3, Side::Right);
  const int m = oracle::ms_count(cone);
  const double s2 = 0.3;
  std::normal_distribution<double> g(0.0, std::sqrt(s2));
  const oracle::Vec in = oracle::random_state(3, rng);
  Matrix avg = Matrix::Zero(8, 8);
  const int samples = 4000;
  for (int t = 0; t < samples; ++t) {
    std::vector<double> shift(m);
    for (double& x : shift) x = g(rng);
    oracle::Vec psi = oracle::embed_input(cone, in);
    oracle::run_native(cone, psi, {}, shift);
    avg += oracle::reduce(psi, cone.output_window, cone.n_total) / samples;
  }
  const Channel ch = assemble_channel(cone, ChannelOptions{AngleImprecision{s2}, 1});
  // statistical agreement, a few standard errors at 4000 samples
  CHECK(max_abs(ch.apply(in * in.adjoint()) - avg) < 0.02);
}

TEST_CASE("C1 and C2 noiseless superoperators agree") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    AngleProfile p = profile(2, Variant::C1, seed);
    const Superoperator a = layer_channel(p).superoperator();
    p.variant = Variant::C2;
    const Superoperator b = layer_channel(p).superoperator();
    CHECK(max_abs(a.matrix - b.matrix) < 1e-10);
  }
}

TEST_CASE("mixture is the average of the two alignments") {
  std::mt19937_64 rng(13);
  const AngleProfile p = profile(2, Variant::C1, 7);
  const ChannelOptions opt{AngleImprecision{0.01}, 1};
  const Channel l = layer_channel(p, ChannelKind::Left, opt);
  const Channel r = layer_channel(p, ChannelKind::Right, opt);
  const Channel m = layer_channel(p, ChannelKind::Mixture, opt);
  const Matrix rho = random_density(3, rng);
  CHECK(max_abs(m.apply(rho) - (l.apply(rho) + r.apply(rho)) / 2.0) < 1e-14);
  const Superoperator sm = mixture_channel(l.superoperator(), r.superoperator());
  CHECK(max_abs(sm.matrix - m.superoperator().matrix) < 1e-14);
  CHECK(parse_channel_kind("mixture") == ChannelKind::Mixture);
  CHECK_THROWS_AS(parse_channel_kind("middle"), std::invalid_argument);
}

TEST_CASE("hardware convention is the Hadamard image") {
  std::mt19937_64 rng(14);
  for (int d : {2, 3}) {
    const AngleProfile p = profile(d, Variant::C1, 40 + d);
    const int n = channel_width(d);
    const ChannelOptions opt{AngleImprecision{0.02}, 1};
    const Channel xx = layer_channel(p, ChannelKind::Mixture, opt, Convention::XX);
    const Channel zz = layer_channel(p, ChannelKind::Mixture, opt, Convention::ZZ);
    Matrix h = Matrix::Ones(1, 1);
    for (int i = 0; i < n; ++i) h = oracle::kron(h, oracle::hadamard());
    const Matrix rho = random_density(n, rng);
    CHECK(max_abs(zz.apply(rho) - h * xx.apply(h * rho * h) * h) < 1e-12);
  }
}

TEST_CASE("amplified noiseless gates are the identity insertion") {
  std::mt19937_64 rng(15);
  const AngleProfile p = profile(2, Variant::C1, 9);
  const Channel a = layer_channel(p, ChannelKind::Left, ChannelOptions{Noiseless{}, 3});
  const Channel b = layer_channel(p, ChannelKind::Left);
  const Matrix rho = random_density(3, rng);
  CHECK(max_abs(a.apply(rho) - b.apply(rho)) < 1e-13);
  // amplified noise is stronger
  const Channel n1 = layer_channel(p, ChannelKind::Left, ChannelOptions{AngleImprecision{0.01}, 1});
  const Channel n3 = layer_channel(p, ChannelKind::Left, ChannelOptions{AngleImprecision{0.01}, 3});
  CHECK(max_abs(n3.apply(rho) - b.apply(rho)) > max_abs(n1.apply(rho) - b.apply(rho)));
  CHECK_THROWS_AS(layer_channel(p, ChannelKind::Left, ChannelOptions{Noiseless{}, 2}), std::invalid_argument);
}

TEST_CASE("CPTP verification") {
  const AngleProfile p = profile(2, Variant::C2, 16);
  for (const NoiseModel& noise : std::vector<NoiseModel>{Noiseless{}, AngleImprecision{0.01}, Depolarizing{0.01}}) {
    const CptpReport r = verify_cptp(layer_channel(p, ChannelKind::Mixture, ChannelOptions{noise, 1}).superoperator());
    CHECK(r.pass);
    CHECK(r.tp_residual < 1e-10);
    CHECK(r.choi_min_eigenvalue > -1e-10);
    CHECK(r.max_abs_eigenvalue <= 1 + 1e-10);
  }
  // transpose map: trace preserving, not completely positive
  Superoperator t{1, Matrix::Zero(4, 4)};
  t.matrix(0, 0) = t.matrix(3, 3) = 1;
  t.matrix(1, 2) = t.matrix(2, 1) = 1;
  const CptpReport bad = verify_cptp(t);
  CHECK_FALSE(bad.pass);
  CHECK(bad.choi_min_eigenvalue < -0.4);
  Superoperator half{1, 0.5 * Matrix::Identity(4, 4)};
  CHECK_FALSE(verify_cptp(half).pass);
}
