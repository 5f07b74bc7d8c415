import math

import numpy as np
import pytest

import dmera


@pytest.fixture(scope="module")
def d2():
    return dmera.bundled_angles(2)


def test_profile_roundtrip(d2):
    p = dmera.AngleProfile.from_json(d2.to_json())
    assert p.thetas == d2.thetas
    assert p.depth == 2
    assert len(p.digest()) == 16


def test_bad_variant():
    with pytest.raises(ValueError):
        dmera.AngleProfile([0.1, 0.2], "C3")


def test_energy(d2):
    assert dmera.energy(d2) == pytest.approx(-1.23948, abs=1e-4)


def test_superoperator_trace_preserving(d2):
    s = dmera.superoperator(d2, "imprecision:sigma2=0.01")
    dim = 2 ** dmera.channel_width(2)
    assert s.shape == (dim * dim, dim * dim)
    identity = np.eye(dim).reshape(-1, order="F")
    assert np.allclose(identity.conj() @ s, identity.conj(), atol=1e-12)
    assert dmera.verify_cptp(d2, "depolarizing:p=0.01")["pass"]


def test_spectrum_and_dimensions(d2):
    spec = dmera.spectrum(d2, 8)
    assert abs(spec[0][0] - 1) < 1e-9
    ds, de = dmera.primary_dimensions(d2)
    assert ds == pytest.approx(0.136, abs=0.005)
    assert de == pytest.approx(1.0, abs=1e-3)


def test_fixed_point_is_state(d2):
    rho = dmera.fixed_point(d2)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T)


def test_dynamics(d2):
    series = dmera.dynamics(d2, "imprecision:sigma2=0.112", "psi1", 40, ["energy"])
    assert series["energy"][0] == pytest.approx(-32 / 27)
    assert series["energy"][-1] == pytest.approx(-1.08, abs=0.02)


def test_noise_response(d2):
    r = dmera.noise_response(d2, 1e-2)
    assert 1.5 < r["delta_fit"] < 2.5


def test_zne_geometric_roundtrip():
    star, eps, lam = -1.2, 1e-3, 0.3
    e0 = star + eps / (1 - lam)
    r = dmera.zne_geometric(e0, e0 + 2 * eps, e0 + 2 * eps * lam)
    assert r["e_star_hat"] == pytest.approx(star, abs=1e-9)
    assert r["lambda_hat"] == pytest.approx(lam, abs=1e-9)


def test_gate_counts(d2):
    assert dmera.gate_counts(d2) == (120, 156, 33)


def test_noise_grammar_error():
    with pytest.raises(ValueError, match="imprecision"):
        dmera.noise_spec("gaussian:0.1")


def test_cli_in_process(tmp_path):
    code, out, err = dmera.run_cli(["gate-count", "-o", str(tmp_path)])
    assert code == 0, err
    assert "120" in out
    assert (tmp_path / "gate_count.csv").exists()
    with pytest.raises(ValueError):
        dmera.run_cli(["spectrum", "--noise", "bogus"])


def test_dilution_small(d2):
    rows = dmera.dilution(d2, 1e-2, 4, 8, [1], 20, 3)
    assert all(0 <= r["fidelity"] <= 1 + 1e-12 for r in rows)
    assert not math.isnan(rows[0]["stderr"])
