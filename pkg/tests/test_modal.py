import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hope.boundary import ModeCoefficients, build_mode_table, incident_forcing
from hope.config import NumericalParams, ScatteringConfig, lateral_grid
from hope.diagnostics import elliptic_ratio
from hope.errors import NearSingularMode, WoodAnomaly
from hope.modal import (CollocationSolver, GreensKernel, GreensSolver, ModalRHS,
                        assemble_modal_rhs, make_solver, solve_mode_collocation, solve_mode_greens)
from hope.spectral import VectorField, VerticalGrid, vertical_wavenumber
from hope.verification import random_modal_instances


def make_mode(k0=2.0, eps=(1.0, 1.5, 2.0), a=0.7, b=-0.4, h=1.0):
    eu, ew, eb = eps
    g = [complex(vertical_wavenumber(e, k0, a, b)) for e in (eb, eu, ew)]
    return ModeCoefficients(a, b, g[0], g[1], g[2], eb * k0**2, h)


def single_mode_field(profile):
    return np.asarray(profile, dtype=complex)[:, None, None, :]


def test_rhs_examples():
    vert = VerticalGrid(16, 1.0)
    z = vert.z
    mode = make_mode()
    rhs = assemble_modal_rhs(np.zeros((3, 1, 1, 16)), None, None, mode, vert)
    assert not rhs.H.any() and not rhs.L.any()
    m0 = make_mode(a=0.0, b=0.0)
    f = np.sin(z) + 0.3
    rhs = assemble_modal_rhs(single_mode_field([f, 0 * z, 0 * z]), None, None, m0, vert)
    assert np.allclose(rhs.H, -f, atol=1e-14) and not rhs.L.any()
    rhs = assemble_modal_rhs(single_mode_field([0 * z, 0 * z, np.cos(2 * z)]), None, None, m0, vert)
    assert np.max(np.abs(rhs.H)) == 0 and np.max(np.abs(rhs.L)) == 0


@pytest.mark.parametrize("solver", [solve_mode_collocation, solve_mode_greens])
def test_zero_data_gives_zero(solver):
    vert = VerticalGrid(12, 1.0)
    assert not np.any(solver(ModalRHS.zeros(12), make_mode(), vert))


@pytest.mark.parametrize("solver", [solve_mode_collocation, solve_mode_greens])
@pytest.mark.parametrize("kind", ["exp", "poly"])
def test_manufactured_solution(solver, kind):
    """Pick v, build H and the Robin data analytically, recover v to 1e-9."""
    h = 1.0
    vert = VerticalGrid(40, h)
    z = vert.z
    mode = make_mode(k0=3.0)
    g, gu, gw = mode.gamma_bar, mode.gamma_u, mode.gamma_w
    if kind == "exp":
        v = lambda s: np.exp(1j * g * s)
        dv = lambda s: 1j * g * np.exp(1j * g * s)
        d2v = lambda s: -(g**2) * np.exp(1j * g * s)
    else:
        v = lambda s: (s**2 + 0.5j) * np.exp(1j * s)
        dv = lambda s: (2 * s + 1j * (s**2 + 0.5j)) * np.exp(1j * s)
        d2v = lambda s: (2 + 4j * s - (s**2 + 0.5j)) * np.exp(1j * s)
    H = d2v(z) + g**2 * v(z)
    Q = -(dv(h) - 1j * gu * v(h))
    R = dv(-h) + 1j * gw * v(-h)
    rhs = ModalRHS(H, 2 * H, np.array([Q, 2 * Q, 0]), np.array([R, 2 * R, 0]),
                   np.zeros((3, 40), complex), np.zeros(40, complex))
    sol = solver(rhs, mode, vert)
    assert np.max(np.abs(sol[0] - v(z))) < 1e-9
    assert np.max(np.abs(sol[1] - 2 * v(z))) < 1e-9
    vz = (1j * mode.alpha_p * dv(z) + 2j * mode.beta_q * dv(z)) / g**2
    assert np.max(np.abs(sol[2] - vz)) < 1e-8


def test_order_zero_mode_is_plane_wave():
    cfg = ScatteringConfig(k0=2 * math.pi, theta=0.25, d_x=0.9, d_y=0.9)
    lat = lateral_grid(cfg, NumericalParams(4, 4, 24))
    tab = build_mode_table(cfg, lat)
    vert = VerticalGrid(24, cfg.h)
    Q = incident_forcing(cfg, lat)
    rhs = assemble_modal_rhs(np.zeros((3, 4, 4, 24)), Q, None, tab.mode(0, 0), vert)
    want = cfg.A[:, None] * np.exp(-1j * cfg.gamma_u * vert.z)
    for solver in (solve_mode_collocation, solve_mode_greens):
        assert np.max(np.abs(solver(rhs, tab.mode(0, 0), vert) - want)) < 1e-9


@pytest.mark.parametrize("gamma_h", [0.7, 6.0, 50.0, 400.0])
@pytest.mark.parametrize("evanescent", [False, True])
def test_greens_homogeneous_solutions(gamma_h, evanescent):
    """phi_h meets the z = -h Robin row and y_t the z = h row; the rescaled pieces never overflow."""
    h = 1.0
    g = gamma_h * (1j if evanescent else 1.0)
    mode = ModeCoefficients(0.0, 0.0, g, 1.3 * g if evanescent else 2.0, 0.8 * g if evanescent else 3.0,
                            1.0, h)
    kern = GreensKernel.from_mode(mode)
    zs = np.array([-h, 0.0, h])
    ph, dph = kern.phi_h(zs), kern.dphi_h(zs)
    yt, dyt = kern.top_profile(zs)
    assert np.all(np.isfinite(ph)) and np.all(np.isfinite(yt))
    scale_b = abs(dph[0]) + abs(mode.gamma_w * ph[0])
    assert abs(dph[0] + 1j * mode.gamma_w * ph[0]) <= 1e-10 * scale_b
    scale_t = abs(dyt[2]) + abs(mode.gamma_u * yt[2])
    assert abs(dyt[2] - 1j * mode.gamma_u * yt[2]) <= 1e-10 * scale_t


def test_deep_evanescent_mode_bounded():
    """gamma_bar h = 50: finite output, size within a modest multiple of the modal bound."""
    h = 1.0
    vert = VerticalGrid(160, h)
    k0, a = 1.0, 50.0
    mode = ModeCoefficients(a, 0.0, *(complex(vertical_wavenumber(e, k0, a, 0.0)) for e in (2.0, 1.0, 1.5)),
                            2.0 * k0**2, h)
    rng = np.random.default_rng(4)
    ratios = []
    for _ in range(5):
        H = rng.normal() * np.cos(vert.z * rng.uniform(0, 3)) + 1j * rng.normal()
        Q, R = rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3) + 0j
        rhs = ModalRHS(H, H, Q, R, np.zeros((3, 160), complex), np.zeros(160, complex))
        v = solve_mode_greens(rhs, mode, vert)
        assert np.all(np.isfinite(v))
        gb = abs(mode.gamma_bar)
        bound = np.max(np.abs(H)) / gb**2 + abs(Q[0]) / gb + abs(R[0]) / gb
        ratios.append(np.max(np.abs(v[0])) / bound)
    assert max(ratios) < 2.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_backends_agree_on_random_instances(seed):
    vert = VerticalGrid(96, 1.0)
    for inst in random_modal_instances(4, vert, seed=seed):
        rhs = assemble_modal_rhs(inst.forcing, inst.Q, inst.R, inst.mode, vert)
        a = solve_mode_collocation(rhs, inst.mode, vert)
        b = solve_mode_greens(rhs, inst.mode, vert)
        assert np.max(np.abs(a - b)) < 1e-8 * np.max(np.abs(b))


def test_wood_and_singular_guards():
    vert = VerticalGrid(8, 1.0)
    bad = ModeCoefficients(1.0, 0.0, 0j, 1.0 + 0j, 1.0 + 0j, 1.0, 1.0)
    with pytest.raises(WoodAnomaly):
        solve_mode_collocation(ModalRHS.zeros(8), bad, vert)
    with pytest.raises(WoodAnomaly):
        solve_mode_greens(ModalRHS.zeros(8), bad, vert)
    with pytest.raises(NearSingularMode):
        solve_mode_collocation(ModalRHS.zeros(8), make_mode(), vert, wood_tol=0.999)


def full_problem(N=4, Nz=32):
    cfg = ScatteringConfig(k0=3.0, eps_bar=1.7, eps_w=1.3, theta=0.3, phi_angle=0.4, d_x=1.4, d_y=1.1)
    lat = lateral_grid(cfg, NumericalParams(N, N, Nz))
    tab = build_mode_table(cfg, lat)
    vert = VerticalGrid(Nz, cfg.h)
    rng = np.random.default_rng(7)
    F = VectorField(np.cos(np.outer(rng.uniform(0, 2, 3 * N * N), vert.z)).reshape(3, N, N, Nz)
                    * (rng.normal(size=(3, N, N, 1)) + 1j), lat, vert)
    Q = rng.normal(size=(3, N, N)) + 1j * rng.normal(size=(3, N, N))
    R = rng.normal(size=(3, N, N)) + 0j
    return tab, vert, F, Q, R


def test_batched_solver_matches_per_mode_and_threads():
    tab, vert, F, Q, R = full_problem()
    batched = CollocationSolver(tab, vert).solve(F, Q, R)
    threaded = CollocationSolver(tab, vert, threads=3).solve(F, Q, R)
    greens = GreensSolver(tab, vert, threads=2).solve(F, Q, R)
    for mode in tab.modes():
        i, j = tab.lateral.index(mode.p, mode.q)
        ref = solve_mode_collocation(assemble_modal_rhs(F, Q, R, mode, vert), mode, vert)
        assert np.max(np.abs(batched.data[:, i, j] - ref)) < 1e-12 * np.max(np.abs(ref))
    assert np.max(np.abs(threaded.data - batched.data)) <= 1e-12 * np.max(np.abs(batched.data))
    assert np.max(np.abs(greens.data - batched.data)) < 1e-8 * np.max(np.abs(batched.data))
    with pytest.raises(ValueError):
        make_solver("spectral", tab, vert)


def test_elliptic_ratio_bounded_across_truncations():
    """The measured elliptic constant does not grow with the lateral truncation."""
    ratios = []
    for N in (4, 8, 16):
        tab, vert, _, _, _ = full_problem(N, 24)
        rng = np.random.default_rng(N)
        worst = 0.0
        for _ in range(3):
            a = rng.normal(size=(3, N, N, 1)) / (1 + tab.lateral.weight()[None, ..., None]) ** 2
            F = VectorField(a * np.cos(vert.z * rng.uniform(0, 2)) + 0j, tab.lateral, vert)
            v = CollocationSolver(tab, vert).solve(F)
            worst = max(worst, elliptic_ratio(v, F, None, None))
        ratios.append(worst)
    assert max(ratios) < 2.0 * min(ratios)


def test_modal_solution_decays_like_inverse_gamma_squared():
    """Same data H on every mode: |v^x| shrinks at least like 1/|gamma_bar|^2."""
    cfg = ScatteringConfig(k0=2.0, d_x=1.0, d_y=1.0, theta=0.1)
    lat = lateral_grid(cfg, NumericalParams(32, 2, 48))
    tab = build_mode_table(cfg, lat)
    vert = VerticalGrid(48, 1.0)
    H = np.cos(vert.z) + 0.5j
    scaled = []
    for p in range(3, 16):
        mode = tab.mode(p, 0)
        rhs = ModalRHS(H, 0 * H, np.zeros(3), np.zeros(3), np.zeros((3, 48), complex), 0 * H)
        v = solve_mode_collocation(rhs, mode, vert)
        scaled.append(np.max(np.abs(v[0])) * abs(mode.gamma_bar) ** 2)
    assert max(scaled) < 2.0 * np.max(np.abs(H))
