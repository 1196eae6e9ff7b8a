"""Permittivity envelopes and the slab permittivity eps_v = eps_bar (1 - delta * env)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError


def phi_ab(z, a, b, w):
    """Smoothed indicator of (a, b): (tanh(w (z - a)) - tanh(w (z - b))) / 2."""
    if not a < b:
        raise ValueError("phi_ab requires a < b")
    if not w > 0:
        raise ValueError("phi_ab requires w > 0")
    z = np.asarray(z, dtype=float)
    return 0.5 * (np.tanh(w * (z - a)) - np.tanh(w * (z - b)))


def _periodic_phi(x, half_width, w, period, center=0.0):
    # wrap to one cell and add the two neighbouring images so the profile is
    # exactly periodic on any grid
    xw = np.mod(np.asarray(x, dtype=float) - center + 0.5 * period, period) - 0.5 * period
    return sum(phi_ab(xw + k * period, -half_width, half_width, w) for k in (-1, 0, 1))


class EnvelopeSpec:
    """Base class; subclasses implement :meth:`evaluate` or override :meth:`sample`."""

    analytic = True

    def evaluate(self, x, y, z, d_x, d_y):
        raise NotImplementedError

    def sample(self, lateral, vertical):
        X, Y, Z = np.meshgrid(lateral.x, lateral.y, vertical.z, indexing="ij")
        return np.asarray(self.evaluate(X, Y, Z, lateral.d_x, lateral.d_y), dtype=float)

    def __mul__(self, other):
        return Product((self, other))

    def __add__(self, other):
        return Sum((self, other))


@dataclass(frozen=True)
class Constant(EnvelopeSpec):
    c: float = 0.0

    def evaluate(self, x, y, z, d_x, d_y):
        return np.full(np.broadcast(x, y, z).shape, float(self.c))


@dataclass(frozen=True)
class TanhSlabGap(EnvelopeSpec):
    """Slab of half-thickness ``d`` pierced by a gap of half-width ``g`` in x.

    env(x, y, z) = Phi_{-d,d}(z) * (1 - Phi_{-g,g}(x)), with the x-profile
    periodized over d_x and centred at ``x_center``.
    """

    d: float = 0.25
    g: float = 0.1
    w: float = 50.0
    x_center: float = 0.0

    def __post_init__(self):
        if not (self.d > 0 and self.g > 0 and self.w > 0):
            raise ConfigError("TanhSlabGap needs d > 0, g > 0 and w > 0")

    def evaluate(self, x, y, z, d_x, d_y):
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        gap = _periodic_phi(x, self.g, self.w, d_x, self.x_center)
        return phi_ab(z, -self.d, self.d, self.w) * (1.0 - gap)


@dataclass(frozen=True)
class Tabulated(EnvelopeSpec):
    """Envelope given directly by samples on the solver grid.

    ``values`` has shape (Nx, Ny, Nz) and is laid out exactly like the
    solver's nodal grid: x_i = i d_x/Nx, y_j = j d_y/Ny and z_k the k-th
    Chebyshev-Gauss-Lobatto node counted from the top (z_0 = h).
    """

    values: np.ndarray = field(repr=False)
    analytic = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise ConfigError("tabulated envelope must be a 3-D array")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_file(cls, path, shape):
        """Read a plain-text sample file.

        One or more values per line, whitespace or comma separated, ``#``
        comments allowed. Values are read in C order over (i_x, i_y, i_z),
        i_z varying fastest.
        """
        text = Path(path).read_text()
        tokens = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].replace(",", " ")
            tokens.extend(line.split())
        data = np.array([float(t) for t in tokens])
        if data.size != int(np.prod(shape)):
            raise ConfigError(f"{path}: expected {int(np.prod(shape))} samples, found {data.size}")
        return cls(data.reshape(shape))

    def sample(self, lateral, vertical):
        expected = lateral.shape + (vertical.Nz,)
        if self.values.shape != expected:
            raise ConfigError(f"tabulated envelope shape {self.values.shape} != grid {expected}")
        warnings.warn(
            "tabulated envelope carries no smoothness guarantee; series convergence "
            "and spectral accuracy are not assured",
            UserWarning,
            stacklevel=2,
        )
        return self.values.copy()


@dataclass(frozen=True)
class Product(EnvelopeSpec):
    factors: tuple

    @property
    def analytic(self):
        return all(f.analytic for f in self.factors)

    def sample(self, lateral, vertical):
        out = np.ones(lateral.shape + (vertical.Nz,))
        for f in self.factors:
            out = out * f.sample(lateral, vertical)
        return out

    def evaluate(self, x, y, z, d_x, d_y):
        out = 1.0
        for f in self.factors:
            out = out * f.evaluate(x, y, z, d_x, d_y)
        return out


@dataclass(frozen=True)
class Sum(EnvelopeSpec):
    terms: tuple

    @property
    def analytic(self):
        return all(f.analytic for f in self.terms)

    def sample(self, lateral, vertical):
        return sum(f.sample(lateral, vertical) for f in self.terms)

    def evaluate(self, x, y, z, d_x, d_y):
        return sum(f.evaluate(x, y, z, d_x, d_y) for f in self.terms)


def slab_permittivity(env, eps_bar, delta):
    return eps_bar * (1.0 - delta * np.asarray(env))


def sample_envelope(spec, lateral, vertical, eps_bar=None, delta=None):
    """Nodal samples of the envelope, shape (Nx, Ny, Nz).

    When ``eps_bar`` and ``delta`` are given, the slab permittivity must stay
    positive on every node; otherwise a ConfigError names the worst node.
    """
    env = spec.sample(lateral, vertical)
    if eps_bar is not None and delta is not None:
        eps_v = slab_permittivity(env, eps_bar, delta)
        if np.any(eps_v <= 0):
            i, j, k = np.unravel_index(np.argmin(eps_v), eps_v.shape)
            raise ConfigError(
                f"slab permittivity {eps_v[i, j, k]:.6g} <= 0 at "
                f"(x, y, z) = ({lateral.x[i]:.6g}, {lateral.y[j]:.6g}, {vertical.z[k]:.6g})"
            )
    return env


@dataclass(frozen=True)
class ContinuityReport:
    top_mismatch: float
    bottom_mismatch: float
    tol: float

    @property
    def ok(self):
        return max(self.top_mismatch, self.bottom_mismatch) <= self.tol


def continuity_check(spec, config, lateral, vertical, tol=1e-8):
    """Compare eps_v at z = +-h with the exterior permittivities.

    Returns the maximal mismatch over the lateral grid and warns when it
    exceeds ``tol``.
    """
    env = spec.sample(lateral, vertical)
    eps_v = slab_permittivity(env, config.eps_bar, config.delta)
    top = float(np.max(np.abs(eps_v[..., 0] - config.eps_u)))
    bottom = float(np.max(np.abs(eps_v[..., -1] - config.eps_w)))
    report = ContinuityReport(top, bottom, tol)
    if not report.ok:
        warnings.warn(
            f"slab permittivity does not match the exterior at z = +-h "
            f"(top {top:.3e}, bottom {bottom:.3e})",
            UserWarning,
            stacklevel=2,
        )
    return report
