#include <random>

#include "doctest.h"

#include "dmera/mitigation.hpp"

using namespace dmera;

namespace {

AngleProfile d2() { return AngleProfile::load(std::string(DMERA_DATA_DIR) + "/angles/D2.json"); }

}  // namespace

TEST_CASE("scheme names") {
  for (ZneScheme s : {ZneScheme::LinearFull, ZneScheme::GeomAdditive, ZneScheme::GeomMultiplicative})
    CHECK(parse_zne_scheme(to_string(s)) == s);
  CHECK_THROWS_AS(parse_zne_scheme("cubic"), std::invalid_argument);
}

TEST_CASE("linear extrapolation is exact on linear data") {
  CHECK(zne_linear_full(-1.2 + 0.01, -1.2 + 0.03) == doctest::Approx(-1.2).epsilon(1e-15));
}

TEST_CASE("geometric solver round-trips model data") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> e(-1.3, -1.0), eps(1e-5, 1e-2), lam(0.05, 0.95);
  for (int t = 0; t < 200; ++t) {
    const double star = e(rng), ep = eps(rng), l = lam(rng), c = 3.0;
    const double e0 = star + ep / (1 - l);
    const auto r = zne_geometric(e0, e0 + (c - 1) * ep, e0 + (c - 1) * ep * l, c, ZneScheme::GeomAdditive);
    CHECK(r.accepted);
    CHECK(std::abs(r.e_star_hat - star) < 1e-9);
    CHECK(r.lambda_hat == doctest::Approx(l).epsilon(1e-6));

    const double a0 = std::log(-star) + ep / (1 - l);
    const auto m = zne_geometric(-std::exp(a0), -std::exp(a0 + (c - 1) * ep), -std::exp(a0 + (c - 1) * ep * l), c,
                                 ZneScheme::GeomMultiplicative);
    CHECK(m.accepted);
    CHECK(std::abs(m.e_star_hat - star) < 1e-9);
  }
}

TEST_CASE("geometric fits outside the model are rejected") {
  const auto r = zne_geometric(-1.2, -1.19, -1.17, 3.0, ZneScheme::GeomAdditive);  // lambda = 3
  CHECK_FALSE(r.accepted);
  CHECK(r.e_star_hat == -1.2);
  CHECK_FALSE(r.warning.empty());
  CHECK_THROWS_AS(zne_geometric(-1.2, 1.0, -1.1, 3.0, ZneScheme::GeomMultiplicative), std::invalid_argument);
  CHECK_THROWS_AS(zne_geometric(-1.2, -1.1, -1.1, 1.0, ZneScheme::GeomAdditive), std::invalid_argument);
}

TEST_CASE("amplified stacks") {
  const AngleProfile p = d2();
  const AmplificationSpec last{AmplificationSpec::Target::Layer, 0, 3};
  const auto stack = amplify_gates(p, AngleImprecision{1e-3}, 4, last);
  CHECK(stack.size() == 4);
  // without noise the amplification is invisible
  const auto clean = amplify_gates(p, Noiseless{}, 3, last);
  const DensityMatrix start = DensityMatrix::maximally_mixed(3);
  const DensityMatrix a = run_stack(clean, start);
  const Channel ch = layer_channel(p);
  const DensityMatrix b = apply_channel(ch, apply_channel(ch, apply_channel(ch, start)));
  CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-13);
  const AmplificationSpec bad{AmplificationSpec::Target::Layer, 5, 3};
  CHECK_THROWS_AS(amplify_gates(p, Noiseless{}, 3, bad), std::invalid_argument);
}

TEST_CASE("zne measurements are ordered by noise strength") {
  const ZneMeasurements m = zne_measurements(d2(), AngleImprecision{3e-3});
  CHECK(m.baseline > m.noiseless);
  CHECK(m.last > m.baseline);
  CHECK(m.second_last > m.baseline);
  CHECK(m.second_last < m.last);
  CHECK(m.full > m.last);
  const auto all = zne_all(m);
  REQUIRE(all.size() == 3);
  CHECK(all[0].scheme == ZneScheme::LinearFull);
  CHECK(all[1].accepted);
  CHECK(std::abs(all[1].e_star_hat - m.noiseless) < std::abs(m.baseline - m.noiseless));
}
