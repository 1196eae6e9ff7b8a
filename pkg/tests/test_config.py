import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hope.config import (NumericalParams, ScatteringConfig, config_from_dict, default_polarization,
                         load_config, validate)
from hope.envelope import Constant, Product, TanhSlabGap
from hope.errors import ConfigError, InvalidPolarization, NearSingularMode, WoodAnomaly


def test_derived_wavenumbers():
    cfg = ScatteringConfig(k0=2.0, eps_u=2.25, theta=0.3, phi_angle=0.7)
    ku = 1.5 * 2.0
    assert math.isclose(cfg.alpha, ku * math.sin(0.3) * math.cos(0.7))
    assert math.isclose(cfg.beta, ku * math.sin(0.3) * math.sin(0.7))
    assert math.isclose(cfg.gamma_u, ku * math.cos(0.3))
    assert abs(np.dot(cfg.kappa, cfg.A)) < 1e-15
    B = cfg.magnetic_amplitude()
    assert abs(np.dot(B, cfg.A)) < 1e-14 and math.isclose(np.linalg.norm(B), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1.5), st.floats(-math.pi, math.pi))
def test_default_polarization_admissible(theta, phi):
    cfg = ScatteringConfig(k0=1.0, theta=theta, phi_angle=phi)
    assert abs(np.linalg.norm(cfg.A) - 1) < 1e-14
    assert abs(np.dot(cfg.kappa, cfg.A)) < 1e-14
    assert np.array_equal(cfg.A, default_polarization(theta, phi))


def test_positivity_and_grazing_rejected():
    for bad in ({"k0": -1.0}, {"k0": 1.0, "eps_u": 0.0}, {"k0": 1.0, "h": 0.0},
                {"k0": 1.0, "d_x": -2.0}, {"k0": 1.0, "theta": math.pi / 2}):
        with pytest.raises(ConfigError):
            ScatteringConfig(**bad)
    for bad in ({"Nx": 3}, {"Ny": 0}, {"Nz": 3}, {"L": -1}, {"wood_tol": 0.0}):
        with pytest.raises(ConfigError):
            NumericalParams(**bad)


def test_normal_incidence_unit_period():
    """gamma_00 = 2 pi; the four first-order modes sit exactly at cutoff and are the only flags."""
    cfg = ScatteringConfig(k0=2 * math.pi, d_x=1.0, d_y=1.0)
    rep = validate(cfg, NumericalParams(8, 8, 16, 2))
    i, j = 0, 0  # FFT order: (0, 0) first
    assert rep.gammas["u"][i, j] == 2 * math.pi
    assert rep.offending_modes() == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert {x.kind for x in rep.issues} == {"wood_anomaly"}
    # a slightly shorter period moves them off cutoff and validation passes
    assert validate(ScatteringConfig(k0=2 * math.pi, d_x=0.9, d_y=0.9), NumericalParams(8, 8, 16)).ok


def test_wood_anomaly_example():
    cfg = ScatteringConfig(k0=1.0, d_x=2 * math.pi, d_y=2 * math.pi)
    rep = validate(cfg, NumericalParams(4, 4, 8))
    assert (1, 0) in rep.offending_modes()
    with pytest.raises(WoodAnomaly) as exc:
        rep.raise_for_status()
    assert exc.value.category == "wood_anomaly"


def test_longitudinal_polarization_rejected():
    cfg = ScatteringConfig(k0=1.0, A=np.array([0, 0, 1]))
    with pytest.raises(InvalidPolarization):
        validate(cfg, NumericalParams(4, 4, 8)).raise_for_status()
    cfg = ScatteringConfig(k0=1.0, A=np.array([2, 0, 0]))
    assert not validate(cfg, NumericalParams(4, 4, 8)).ok


def test_near_singular_mode_flagged():
    """A wood_tol above every mode's relative determinant flags near-singular modes."""
    cfg = ScatteringConfig(k0=2.0, eps_bar=2.0, d_x=1.3, d_y=1.1)
    rep = validate(cfg, NumericalParams(4, 4, 8, wood_tol=0.99))
    assert any(i.kind == "near_singular" for i in rep.issues)
    with pytest.raises((NearSingularMode, WoodAnomaly)):
        rep.raise_for_status()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 12), st.floats(0.3, 3))
def test_validate_pure_and_symmetric(k0, period):
    cfg = ScatteringConfig(k0=k0, d_x=period, d_y=period)
    num = NumericalParams(6, 6, 8)
    a, b = validate(cfg, num), validate(cfg, num)
    assert a.issues == b.issues
    flagged = set(a.offending_modes())
    # the retained lattice is -3..2, so only compare modes whose mirror images are retained
    for p, q in flagged:
        if abs(p) < 3 and abs(q) < 3:
            assert (q, p) in flagged and (-p, -q) in flagged


def test_config_file_toml_and_json(tmp_path):
    toml = tmp_path / "slab.toml"
    toml.write_text(
        'k0 = 4.0\nd_x = 2.0\nd_y = 2.0\ndelta = 0.1\ntheta = 30.0\nphi_angle = 90.0\n'
        'A = [[1.0, 0.0], "0", "0"]\n'
        '[numerics]\nNx = 4\nNy = 4\nNz = 16\nL = 3\ndealias = false\n'
        '[envelope]\ntype = "product"\n'
        '[[envelope.parts]]\ntype = "tanh_slab_gap"\nw = 20.0\n'
        '[[envelope.parts]]\ntype = "constant"\nc = 0.5\n'
    )
    cfg, num, env = load_config(toml)
    assert math.isclose(cfg.theta, math.pi / 6) and math.isclose(cfg.phi_angle, math.pi / 2)
    assert cfg.A[0] == 1 and num.L == 3 and not num.dealias
    assert isinstance(env, Product) and env.factors[0] == TanhSlabGap(w=20.0)
    js = tmp_path / "slab.json"
    js.write_text(json.dumps({"k0": 1.5, "numerics": {"Nz": 12}}))
    cfg2, num2, env2 = load_config(js)
    assert cfg2.k0 == 1.5 and num2.Nz == 12 and env2 == Constant(0.0)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"k0": 1.0, "kz": 2})
    with pytest.raises(ConfigError, match="k0"):
        config_from_dict({"h": 1.0})
    with pytest.raises(ConfigError):
        config_from_dict({"k0": 1.0, "envelope": {"type": "sawtooth"}})
    bad = tmp_path / "bad.toml"
    bad.write_text("k0 = = 1")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_config_round_trips_through_dict():
    cfg = ScatteringConfig(k0=3.0, delta=0.2, theta=0.1, phi_angle=0.4)
    d = cfg.as_dict()
    assert json.loads(json.dumps(d)) == d
    assert cfg == ScatteringConfig(**{**d, "A": np.array([complex(*a) for a in d["A"]])})
