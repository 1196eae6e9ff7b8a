"""Independent closed-form solutions used for verification.

``three_layer`` solves the planar problem (homogeneous slab of permittivity
``eps_slab`` between the two half-spaces) with a 2x2 transfer matrix for each
transverse component, matching value and normal derivative at z = +-h. The
normal component then follows from transversality of the up- and
down-going slab waves. Nothing here touches the collocation or Green's
machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _transfer(gamma, length):
    g = complex(gamma)
    c = np.cos(g * length)
    s = np.sin(g * length)
    sinc = s / g if g != 0 else length
    return np.array([[c, sinc], [-g * s, c]])


@dataclass(frozen=True)
class ThreeLayerSolution:
    reflected: np.ndarray  # (3,) amplitude of exp(i gamma_u (z - h)) above the slab
    transmitted: np.ndarray  # (3,) amplitude of exp(-i gamma_w (z + h)) below
    up: np.ndarray  # slab up-going amplitudes P (exp(+i gamma_s z))
    down: np.ndarray  # slab down-going amplitudes M (exp(-i gamma_s z))
    gamma_s: complex
    alpha: float
    beta: float

    def profile(self, z):
        """Slab field E(z) of the (0, 0) mode, shape (3, len(z))."""
        z = np.asarray(z, dtype=float)
        e_up = np.exp(1j * self.gamma_s * z)
        e_dn = np.exp(-1j * self.gamma_s * z)
        return self.up[:, None] * e_up + self.down[:, None] * e_dn

    def dprofile(self, z):
        z = np.asarray(z, dtype=float)
        g = self.gamma_s
        return 1j * g * (self.up[:, None] * np.exp(1j * g * z) - self.down[:, None] * np.exp(-1j * g * z))


def three_layer(config, eps_slab):
    """Plane-wave solution for a homogeneous slab under the componentwise transparent conditions."""
    k0, h = config.k0, config.h
    alpha, beta, gu = config.alpha, config.beta, config.gamma_u
    lat2 = alpha**2 + beta**2
    gw = np.sqrt(complex(config.eps_w * k0**2 - lat2))
    if gw.imag < 0:
        gw = -gw
    gs = np.sqrt(complex(eps_slab * k0**2 - lat2))
    if gs.imag < 0:
        gs = -gs
    m = _transfer(gs, 2 * h) @ np.array([1.0, -1j * gw])
    refl = np.zeros(3, complex)
    trans = np.zeros(3, complex)
    up = np.zeros(3, complex)
    down = np.zeros(3, complex)
    for comp in (0, 1):
        a_in = config.A[comp] * np.exp(-1j * gu * h)
        t = -2j * gu * a_in / (m[1] - 1j * gu * m[0])
        r = m[0] * t - a_in
        f, df = t, -1j * gw * t  # value and slope at z = -h
        up[comp] = 0.5 * (f + df / (1j * gs)) * np.exp(1j * gs * h)
        down[comp] = 0.5 * (f - df / (1j * gs)) * np.exp(-1j * gs * h)
        refl[comp], trans[comp] = r, t
    up[2] = -(alpha * up[0] + beta * up[1]) / gs
    down[2] = (alpha * down[0] + beta * down[1]) / gs
    sol = ThreeLayerSolution(refl, trans, up, down, gs, alpha, beta)
    top = sol.profile([h])[:, 0]
    bottom = sol.profile([-h])[:, 0]
    refl[2] = top[2] - config.A[2] * np.exp(-1j * gu * h)
    trans[2] = bottom[2]
    return sol


def plane_wave_field(config, lateral, vertical, eps_slab=None):
    """Nodal-vertical / modal-lateral array (3, Nx, Ny, Nz) of the three-layer field."""
    eps_slab = config.eps_bar if eps_slab is None else eps_slab
    sol = three_layer(config, eps_slab)
    data = np.zeros((3,) + lateral.shape + (vertical.Nz,), complex)
    i, j = lateral.index(0, 0)
    data[:, i, j, :] = sol.profile(vertical.z)
    return data
