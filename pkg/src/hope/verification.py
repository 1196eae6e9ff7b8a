"""Oracle suites shared by ``hope verify`` and the test-suite.

- ``random_modal_instances`` / ``backend_agreement``: collocation against the
  closed-form Green's representation on random single-mode problems.
- ``transfer_matrix_errors``: constant-envelope HOPE amplitudes against the
  three-layer transfer-matrix solution, order by order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import ModeCoefficients, relative_determinant
from .config import NumericalParams, ScatteringConfig
from .diagnostics import rayleigh_amplitudes
from .driver import HopeProblem, run_hope, taylor_sum
from .envelope import Constant
from .modal import assemble_modal_rhs, solve_mode_collocation, solve_mode_greens
from .oracles import three_layer
from .spectral import VerticalGrid, vertical_wavenumber


@dataclass(frozen=True)
class ModalInstance:
    mode: ModeCoefficients
    forcing: np.ndarray  # (3, 1, 1, Nz)
    Q: np.ndarray  # (3, 1, 1)
    R: np.ndarray
    evanescent: bool


def random_modal_instances(n, vertical, seed=0, max_gamma_h=50.0, min_exterior_gamma=0.1,
                           min_rel_det=1e-6):
    """Seeded random single-mode problems, half propagating and half evanescent in the slab.

    |gamma_bar| h is drawn uniformly from (0.2, max_gamma_h). Exterior modes
    closer to cutoff than ``min_exterior_gamma`` and near-singular Robin
    determinants are redrawn. The forcing is a sum of random sinusoids in z.
    """
    rng = np.random.default_rng(seed)
    z = vertical.z
    h = vertical.h
    out = []
    while len(out) < n:
        evan = len(out) % 2 == 1
        gh = rng.uniform(0.2, max_gamma_h)
        g2 = (gh / h) ** 2 * (-1 if evan else 1)
        eb, eu, ew = rng.uniform(1.0, 4.0, 3)
        lat2 = rng.uniform(0.0, 40.0)
        k0 = math.sqrt((g2 + lat2) / eb) if g2 + lat2 > 0 else None
        if k0 is None or k0 <= 0:
            continue
        ang = rng.uniform(0, 2 * np.pi)
        a, b = math.sqrt(lat2) * math.cos(ang), math.sqrt(lat2) * math.sin(ang)
        gb, gu, gw = (complex(vertical_wavenumber(e, k0, a, b)) for e in (eb, eu, ew))
        if min(abs(gu), abs(gw)) < min_exterior_gamma or abs(gb) < min_exterior_gamma:
            continue
        if relative_determinant(gb, gu, gw, h) < min_rel_det:
            continue
        mode = ModeCoefficients(a, b, gb, gu, gw, eb * k0**2, h)
        c = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        freq = rng.uniform(0.0, 3.0, (3, 4)) / h
        phase = rng.uniform(0.0, 2 * np.pi, (3, 4))
        F = np.einsum("ck,ckz->cz", c, np.cos(freq[..., None] * z + phase[..., None]))
        Q = rng.normal(size=3) + 1j * rng.normal(size=3)
        R = rng.normal(size=3) + 1j * rng.normal(size=3)
        out.append(ModalInstance(mode, F[:, None, None, :], Q[:, None, None], R[:, None, None], evan))
    return out


def backend_agreement(n=100, Nz=128, h=1.0, seed=0):
    """Worst relative max-norm difference between the two backends over ``n`` instances."""
    vert = VerticalGrid(Nz, h)
    worst = 0.0
    for inst in random_modal_instances(n, vert, seed):
        rhs = assemble_modal_rhs(inst.forcing, inst.Q, inst.R, inst.mode, vert)
        v_c = solve_mode_collocation(rhs, inst.mode, vert)
        v_g = solve_mode_greens(rhs, inst.mode, vert)
        if not (np.all(np.isfinite(v_c)) and np.all(np.isfinite(v_g))):
            return math.inf
        worst = max(worst, float(np.max(np.abs(v_c - v_g)) / np.max(np.abs(v_g))))
    return worst


def constant_envelope_setup(theta=0.0, delta=0.05, k0=2 * np.pi, period=0.9, Nz=32, L=10, A=None):
    cfg = ScatteringConfig(k0=k0, h=1.0, delta=delta, theta=theta, d_x=period, d_y=period, A=A)
    return cfg, NumericalParams(8, 8, Nz, L)


def transfer_matrix_errors(problem, series, delta):
    """Relative amplitude error of E^L against the three-layer solution for L = 0..series.L."""
    cfg = problem.config
    sol = three_layer(cfg, cfg.eps_bar * (1.0 - delta))
    want = np.concatenate([sol.reflected, sol.transmitted])
    i, j = problem.lateral.index(0, 0)
    errs = []
    for L in range(series.L + 1):
        amps = rayleigh_amplitudes(taylor_sum(series, delta, L), cfg, problem.table)
        got = np.concatenate([amps.reflected[:, i, j], amps.transmitted[:, i, j]])
        others = max(np.max(np.abs(np.delete(amps.reflected.reshape(3, -1), 0, axis=1)), initial=0),
                     np.max(np.abs(np.delete(amps.transmitted.reshape(3, -1), 0, axis=1)), initial=0))
        errs.append(float(max(np.max(np.abs(got - want)), others) / np.max(np.abs(want))))
    return np.array(errs)


def run_suite(name="oracle"):
    """Yield (check name, passed, detail) triples."""
    if name in ("oracle", "backends"):
        worst = backend_agreement(40, Nz=96)
        yield "modal backends agree", worst < 1e-8, f"worst relative difference {worst:.2e}"
        cfg, num = constant_envelope_setup(theta=0.2, L=4)
        num = NumericalParams(4, 4, 24, 4)
        env = Constant(1.0)
        fields = {}
        for backend in ("collocation", "greens"):
            pb = HopeProblem.build(cfg, num, env, backend=backend)
            fields[backend] = taylor_sum(run_hope(pb), cfg.delta).data
        diff = float(np.max(np.abs(fields["collocation"] - fields["greens"]))
                     / np.max(np.abs(fields["greens"])))
        yield "series backends agree", diff < 1e-8, f"relative difference {diff:.2e}"
    if name in ("oracle", "transfer"):
        for theta in (0.0, 0.3):
            cfg, num = constant_envelope_setup(theta=theta)
            pb = HopeProblem.build(cfg, num, Constant(1.0))
            errs = transfer_matrix_errors(pb, run_hope(pb), cfg.delta)
            yield (f"transfer matrix theta={theta}", errs[-1] < 1e-7,
                   f"terminal relative amplitude error {errs[-1]:.2e}")
