"""Vertical wavenumbers, transparent-boundary multipliers and incident forcing.

The outgoing conditions are imposed componentwise on the Cartesian field:

    -d_z E - T_u[E] = phi   at z = h,       d_z E - T_w[E] = 0   at z = -h,

with T_m the Fourier multiplier -i gamma^(m)_{p,q}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .errors import WoodAnomaly
from .spectral import vertical_wavenumber

if TYPE_CHECKING:
    from .config import ScatteringConfig
    from .spectral import LateralGrid

MEDIA = ("u", "w", "bar")


def relative_determinant(gamma_bar, gamma_u, gamma_w, h):
    """Scale-free size of the modal Robin determinant.

    With kappa = -i gamma (Re kappa >= 0) and a = k + k_w, b = k - k_w,
    c = k - k_u, d = k + k_u, the determinant rescaled by exp(-2 kappa h) is
    a d - b c exp(-4 kappa h); it is divided by |a d| + |b c exp(-4 kappa h)|.
    """
    k = -1j * np.asarray(gamma_bar)
    ku = -1j * np.asarray(gamma_u)
    kw = -1j * np.asarray(gamma_w)
    a, b, c, d = k + kw, k - kw, k - ku, k + ku
    e = np.exp(-4.0 * k * h)
    num = np.abs(a * d - b * c * e)
    den = np.abs(a * d) + np.abs(b * c * e)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


@dataclass(frozen=True)
class ModeCoefficients:
    """Everything the 1-D modal problems need for one lateral mode."""

    alpha_p: float
    beta_q: float
    gamma_bar: complex
    gamma_u: complex
    gamma_w: complex
    k2eps: float  # k0^2 * eps_bar
    h: float
    p: int = 0
    q: int = 0


@dataclass(frozen=True)
class ModeTable:
    """Per-mode wavenumbers on the retained (p, q) lattice, FFT-ordered."""

    lateral: "LateralGrid"
    k0: float
    eps: dict  # medium -> permittivity
    h: float
    gamma: dict  # medium -> complex array (Nx, Ny)

    @cached_property
    def propagating(self):
        return {m: (np.abs(g.imag) == 0) & (g.real > 0) for m, g in self.gamma.items()}

    def counts(self):
        return {m: int(v.sum()) for m, v in self.propagating.items()}

    def identity_residual(self):
        """max |gamma^2 + alpha_p^2 + beta_q^2 - eps k0^2| over media and modes.

        Each mode is scaled by max(alpha_p^2 + beta_q^2, eps k0^2), the size of
        the terms being cancelled.
        """
        lat = self.lateral
        lat2 = lat.alpha_p[:, None] ** 2 + lat.beta_q[None, :] ** 2
        out = 0.0
        for m, g in self.gamma.items():
            target = self.eps[m] * self.k0**2
            scale = np.maximum(lat2, target)
            out = max(out, float(np.max(np.abs(g**2 + lat2 - target) / scale)))
        return out

    def mode(self, p, q):
        i, j = self.lateral.index(p, q)
        return ModeCoefficients(
            float(self.lateral.alpha_p[i]), float(self.lateral.beta_q[j]),
            complex(self.gamma["bar"][i, j]), complex(self.gamma["u"][i, j]),
            complex(self.gamma["w"][i, j]), self.eps["bar"] * self.k0**2, self.h, int(p), int(q),
        )

    def modes(self):
        """Iterate ModeCoefficients in FFT (C) order."""
        for p in self.lateral.p:
            for q in self.lateral.q:
                yield self.mode(p, q)


def build_mode_table(config: "ScatteringConfig", lateral: "LateralGrid", wood_tol=1e-8):
    """Tabulate gamma^(u), gamma^(w) and gamma^(eps_bar) for every retained mode.

    Raises WoodAnomaly for the first mode (FFT order) with |gamma| < wood_tol.
    """
    eps = {"u": config.eps_u, "w": config.eps_w, "bar": config.eps_bar}
    ap, bq = lateral.alpha_p[:, None], lateral.beta_q[None, :]
    gamma = {m: vertical_wavenumber(eps[m], config.k0, ap, bq) for m in MEDIA}
    for m in MEDIA:
        bad = np.argwhere(np.abs(gamma[m]) < wood_tol)
        if len(bad):
            i, j = bad[0]
            raise WoodAnomaly(int(lateral.p[i]), int(lateral.q[j]), m, complex(gamma[m][i, j]))
    return ModeTable(lateral, config.k0, eps, config.h, gamma)


def apply_T(trace, table, medium):
    """Multiply each modal coefficient by -i gamma^(m)_{p,q} (componentwise)."""
    if medium not in ("u", "w"):
        raise ValueError("medium must be 'u' or 'w'")
    return -1j * table.gamma[medium] * np.asarray(trace)


def incident_forcing(config, lateral):
    """Modal trace of phi = 2 i gamma_u exp(-i gamma_u h) A exp(i alpha x + i beta y)."""
    out = np.zeros((3,) + lateral.shape, complex)
    i, j = lateral.index(0, 0)
    g = config.gamma_u
    out[:, i, j] = 2j * g * np.exp(-1j * g * config.h) * config.A
    return out


def outgoing_expansion(trace, medium, config, lateral):
    """Rayleigh amplitudes of the outgoing field from a boundary trace.

    For ``"u"`` the trace at z = h equals u_hat; the reflected (0, 0) amplitude
    is c_00 = u_hat_00 - A exp(-i gamma_u h), all other modes are u_hat. For
    ``"w"`` the trace at z = -h is the transmitted amplitude w_hat itself.
    Both expansions are referenced to their boundary plane.
    """
    amp = np.array(trace, dtype=complex, copy=True)
    if medium == "u":
        i, j = lateral.index(0, 0)
        amp[:, i, j] -= config.A * np.exp(-1j * config.gamma_u * config.h)
    elif medium != "w":
        raise ValueError("medium must be 'u' or 'w'")
    return amp


def boundary_residuals(field, table, config):
    """Residuals of the two transparent conditions, shape (3, Nx, Ny) each.

    top:    -d_z E(h)  - T_u[E(h)]  - phi
    bottom:  d_z E(-h) - T_w[E(-h)]
    """
    dz = field.vertical.derivative(field.data)
    top = -dz[..., 0] - apply_T(field.data[..., 0], table, "u") - incident_forcing(config, field.lateral)
    bottom = dz[..., -1] - apply_T(field.data[..., -1], table, "w")
    return top, bottom
