"""The perturbation recursion.

With eps_v = eps_bar (1 - delta * env) the field is expanded as
E = sum_l E_l delta^l, where every order solves the constant-coefficient
problem

    curl curl E_l - k0^2 eps_bar E_l = F_l,   F_l = -k0^2 eps_bar env E_{l-1},

with the incident forcing phi entering only the l = 0 top boundary row.
"""

from __future__ import annotations

import logging
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boundary import build_mode_table, incident_forcing
from .config import lateral_grid, validate, vertical_grid
from .envelope import EnvelopeSpec, sample_envelope
from .errors import DivergentSeries
from .modal import make_solver
from .spectral import VectorField, divergence, lateral_product, sobolev_norm

log = logging.getLogger(__name__)

OVERFLOW_NORM = 1e150


@dataclass
class HopeProblem:
    """Validated configuration together with grids, mode table, envelope samples and solver."""

    config: object
    num: object
    envelope: EnvelopeSpec
    lateral: object
    vertical: object
    table: object
    env: np.ndarray
    solver: object

    @classmethod
    def build(cls, config, num, envelope, backend="collocation", threads=1):
        validate(config, num).raise_for_status()
        lat = lateral_grid(config, num)
        vert = vertical_grid(config, num)
        table = build_mode_table(config, lat, num.wood_tol)
        env = sample_envelope(envelope, lat, vert, config.eps_bar, config.delta)
        solver = make_solver(backend, table, vert, wood_tol=num.wood_tol, threads=threads)
        return cls(config, num, envelope, lat, vert, table, env, solver)

    @property
    def k2eps(self):
        return self.config.k0**2 * self.config.eps_bar

    def product(self, field_):
        return lateral_product(self.env, field_, self.lateral, dealias=self.num.dealias)

    def forcing(self, prev):
        """F_l = -k0^2 eps_bar env E_{l-1}."""
        return -self.k2eps * self.product(prev)


@dataclass
class HopeSeries:
    """Per-order fields E_0..E_L with their H^s norms.

    With ``spill_dir`` set, orders are written to ``.npy`` files and read
    back memory-mapped.
    """

    lateral: object
    vertical: object
    norm_index: int = 2
    spill_dir: Path | None = None
    _orders: list = field(default_factory=list, repr=False)
    norms: list = field(default_factory=list)

    def __len__(self):
        return len(self._orders)

    @property
    def L(self):
        return len(self._orders) - 1

    def append(self, E):
        with np.errstate(over="ignore"):
            norm = sobolev_norm(E, self.norm_index)
        if not np.isfinite(norm) or norm > OVERFLOW_NORM:
            raise DivergentSeries(
                f"order {len(self._orders)} has H^{self.norm_index} norm {norm:.3e}; "
                "the perturbation series is diverging"
            )
        if self.spill_dir is not None:
            path = Path(self.spill_dir) / f"order_{len(self._orders):04d}.npy"
            np.save(path, E.data)
            self._orders.append(path)
        else:
            self._orders.append(E.data)
        self.norms.append(norm)

    def __getitem__(self, ell):
        item = self._orders[ell]
        data = np.load(item, mmap_mode="r") if isinstance(item, Path) else item
        return VectorField(np.asarray(data), self.lateral, self.vertical)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def ratios(self):
        """Successive norm ratios ||E_l|| / ||E_{l-1}|| (nan where undefined)."""
        n = np.asarray(self.norms)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = n[1:] / n[:-1]
        return np.where(np.isfinite(r), r, np.nan)

    def traces(self, side):
        """Per-order modal traces at z = h (``"top"``) or z = -h (``"bottom"``)."""
        idx = 0 if side == "top" else -1
        return [E.data[..., idx] for E in self]


def order_zero(problem):
    """E_0: zero volume forcing, Q = phi at z = h, R = 0 at z = -h."""
    F = VectorField.zeros(problem.lateral, problem.vertical)
    Q = incident_forcing(problem.config, problem.lateral)
    return problem.solver.solve(F, Q, None)


def next_order(series, problem):
    """Compute E_l from E_{l-1} and append it to ``series``."""
    F = problem.forcing(series[len(series) - 1])
    E = problem.solver.solve(F, None, None)
    series.append(E)
    return E


def run_hope(problem, L=None, norm_index=2, spill_dir=None):
    """Compute orders 0..L (default: ``problem.num.L``)."""
    L = problem.num.L if L is None else L
    if spill_dir is True:
        spill_dir = Path(tempfile.mkdtemp(prefix="hope-orders-"))
    series = HopeSeries(problem.lateral, problem.vertical, norm_index, spill_dir)
    series.append(order_zero(problem))
    for ell in range(1, L + 1):
        next_order(series, problem)
        log.debug("order %d: norm %.6e", ell, series.norms[-1])
    return series


def taylor_sum(series, delta, L_use=None):
    """Partial sum sum_{l <= L_use} E_l delta^l by Horner's rule."""
    L_use = series.L if L_use is None else L_use
    if L_use > series.L:
        raise ValueError(f"series has only {series.L} orders, asked for {L_use}")
    acc = series[L_use].data.copy()
    for ell in range(L_use - 1, -1, -1):
        acc = acc * delta + series[ell].data
    return VectorField(acc, series.lateral, series.vertical)


def curl_curl(E):
    """Modal curl curl of a field on the lateral-modal / vertical-nodal grid."""
    lat, vert = E.lateral, E.vertical
    a = lat.alpha_p[:, None, None]
    b = lat.beta_q[None, :, None]
    Ex, Ey, Ez = E.data
    dEx, dEy, dEz = (vert.derivative(c) for c in (Ex, Ey, Ez))
    ccx = b**2 * Ex - a * b * Ey - vert.derivative(dEx) + 1j * a * dEz
    ccy = a**2 * Ey - a * b * Ex - vert.derivative(dEy) + 1j * b * dEz
    ccz = (a**2 + b**2) * Ez + 1j * a * dEx + 1j * b * dEy
    return E.like(np.stack([ccx, ccy, ccz]))


def residual_check(E, problem, delta=None):
    """Residuals of the full variable-coefficient problem for a summed field.

    The interior residual curl curl E - k0^2 eps_v E is taken on interior
    vertical nodes and scaled by k0^2 eps_bar max|E|; the boundary residuals
    of the transparent conditions (x, y components, which the reduced modal
    problems impose) are scaled by k0 sqrt(eps_bar) max|E|. The z-component
    boundary residuals are reported separately.
    """
    from .boundary import boundary_residuals

    cfg = problem.config
    delta = cfg.delta if delta is None else delta
    k2 = problem.k2eps
    eps_E = E.data - delta * problem.product(E).data
    res = curl_curl(E).data - k2 * eps_E
    size = float(np.max(np.abs(E.data))) or 1.0
    interior = float(np.max(np.abs(res[..., 1:-1]))) / (k2 * size)
    top, bottom = boundary_residuals(E, problem.table, cfg)
    bscale = np.sqrt(k2) * size
    out = {
        "interior": interior,
        "top": float(np.max(np.abs(top[:2]))) / bscale,
        "bottom": float(np.max(np.abs(bottom[:2]))) / bscale,
        "top_z": float(np.max(np.abs(top[2]))) / bscale,
        "bottom_z": float(np.max(np.abs(bottom[2]))) / bscale,
    }
    out["max"] = max(out["interior"], out["top"], out["bottom"])
    return out


def divergence_invariant(series, problem, ell):
    """max over interior nodes of |div E_l + div F_l / (k0^2 eps_bar)|.

    Scaled by k0 sqrt(eps_bar) max|E_l|; F_0 = 0.
    """
    E = series[ell]
    r = divergence(E)
    if ell > 0:
        r = r + divergence(problem.forcing(series[ell - 1])) / problem.k2eps
    size = float(np.max(np.abs(E.data)))
    if size == 0.0:
        return float(np.max(np.abs(r[..., 1:-1])))
    return float(np.max(np.abs(r[..., 1:-1]))) / (np.sqrt(problem.k2eps) * size)
