"""Lateral Fourier / vertical Chebyshev machinery.

Conventions
-----------
A laterally quasiperiodic field is stored as its generalized Fourier
coefficients in (x, y) and its nodal values in z::

    E(x, y, z) = sum_{p,q} E_hat[p, q, j] exp(i alpha_p x + i beta_q y),  z = z_j

``E_hat`` uses numpy FFT ordering along both lateral axes, so index ``i``
along x corresponds to ``p = LateralGrid.p[i]``. The coefficients carry the
normalized lateral measure ``1/(d_x d_y)``, i.e.

    E_hat[p, q] = 1/(d_x d_y) int E exp(-i alpha_p x - i beta_q y) dx dy,

which on the collocated grid ``x_j = j d_x/N_x`` becomes ``fft2 / (N_x N_y)``.
Parseval then reads ``mean(|E|^2) == sum(|E_hat|^2)``.

The vertical grid consists of Chebyshev-Gauss-Lobatto nodes mapped to
[-h, h] and ordered from the top: ``z[0] = h``, ``z[-1] = -h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import ShapeError


def cheb_nodes(n):
    """Chebyshev-Gauss-Lobatto nodes on [-1, 1], descending."""
    if n < 2:
        raise ValueError("need at least two nodes")
    return np.cos(np.pi * np.arange(n) / (n - 1))


def cheb_diff_matrix(n):
    """First-derivative collocation matrix on the descending CGL nodes."""
    x = cheb_nodes(n)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(n))
    # negative-sum trick: rows annihilate constants to rounding
    D -= np.diag(D.sum(axis=1))
    return D


def clenshaw_curtis_weights(n):
    """Clenshaw-Curtis quadrature weights for the n CGL nodes on [-1, 1]."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[inner]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
    w[inner] = 2.0 * v / N
    return w


def barycentric_matrix(nodes, targets):
    """Interpolation matrix from values at CGL ``nodes`` to ``targets``."""
    n = len(nodes)
    wts = (-1.0) ** np.arange(n)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    targets = np.asarray(targets, dtype=float)
    diff = targets.reshape(-1, 1) - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    M = wts / diff
    M /= M.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    M[rows] = exact[rows].astype(float)
    return M.reshape(targets.shape + (n,))


def chebyshev_coefficients(values, axis=-1):
    """Chebyshev coefficients of the interpolant through CGL samples.

    ``values`` must be ordered like :func:`cheb_nodes` (x descending).
    """
    values = np.moveaxis(np.asarray(values), axis, -1)
    n = values.shape[-1]
    a = scipy.fft.dct(values, type=1, axis=-1) / (n - 1)
    a[..., 0] *= 0.5
    a[..., -1] *= 0.5
    return np.moveaxis(a, -1, axis)


def vertical_wavenumber(eps, k0, alpha_p, beta_q):
    """Vertical wavenumber with the outgoing branch.

    Real and non-negative below cutoff, positive imaginary above it.
    """
    arg = eps * k0**2 - np.asarray(alpha_p) ** 2 - np.asarray(beta_q) ** 2
    arg = np.asarray(arg, dtype=float)
    return np.where(arg >= 0, np.sqrt(np.abs(arg)) + 0j, 1j * np.sqrt(np.abs(arg)))


@dataclass(frozen=True)
class LateralGrid:
    Nx: int
    Ny: int
    d_x: float
    d_y: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.Nx < 2 or self.Ny < 2:
            raise ValueError("Nx and Ny must be at least 2")

    @cached_property
    def p(self):
        return np.rint(np.fft.fftfreq(self.Nx, 1.0 / self.Nx)).astype(int)

    @cached_property
    def q(self):
        return np.rint(np.fft.fftfreq(self.Ny, 1.0 / self.Ny)).astype(int)

    @cached_property
    def alpha_p(self):
        return self.alpha + 2 * np.pi / self.d_x * self.p

    @cached_property
    def beta_q(self):
        return self.beta + 2 * np.pi / self.d_y * self.q

    @cached_property
    def x(self):
        return np.arange(self.Nx) * self.d_x / self.Nx

    @cached_property
    def y(self):
        return np.arange(self.Ny) * self.d_y / self.Ny

    @property
    def shape(self):
        return (self.Nx, self.Ny)

    def index(self, p, q):
        """Array index of mode (p, q) in FFT ordering."""
        return int(p) % self.Nx, int(q) % self.Ny

    def weight(self):
        """Sobolev weight <(p,q)>^2 = 1 + p^2 + q^2 on the modal array."""
        return 1.0 + self.p[:, None] ** 2 + self.q[None, :] ** 2

    def phase(self):
        """exp(i alpha x + i beta y) on the collocated lateral grid."""
        return np.exp(1j * self.alpha * self.x)[:, None] * np.exp(1j * self.beta * self.y)[None, :]


@dataclass(frozen=True)
class VerticalGrid:
    Nz: int
    h: float

    def __post_init__(self):
        if self.Nz < 4:
            raise ValueError("Nz must be at least 4")

    @cached_property
    def z(self):
        return self.h * cheb_nodes(self.Nz)

    @cached_property
    def D1(self):
        return cheb_diff_matrix(self.Nz) / self.h

    @cached_property
    def D2(self):
        return self.D1 @ self.D1

    @cached_property
    def weights(self):
        return self.h * clenshaw_curtis_weights(self.Nz)

    def derivative(self, values, order=1):
        """Differentiate along the last axis."""
        out = np.asarray(values)
        for _ in range(order):
            out = out @ self.D1.T
        return out

    def integrate(self, values):
        return np.asarray(values) @ self.weights

    def interpolate(self, values, z):
        M = barycentric_matrix(self.z / self.h, np.asarray(z, dtype=float) / self.h)
        return np.asarray(values) @ M.T


@dataclass
class VectorField:
    """Complex 3-vector field, lateral-modal x vertical-nodal.

    ``data`` has shape (3, Nx, Ny, Nz) with components ordered x, y, z.
    """

    data: np.ndarray
    lateral: LateralGrid = field(repr=False)
    vertical: VerticalGrid = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        expected = (3,) + self.lateral.shape + (self.vertical.Nz,)
        if self.data.shape != expected:
            raise ShapeError(f"field shape {self.data.shape} != {expected}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains non-finite entries")

    @classmethod
    def zeros(cls, lateral, vertical):
        return cls(np.zeros((3,) + lateral.shape + (vertical.Nz,), complex), lateral, vertical)

    x = property(lambda self: self.data[0])
    y = property(lambda self: self.data[1])
    z = property(lambda self: self.data[2])

    def like(self, data):
        return VectorField(data, self.lateral, self.vertical)

    def __add__(self, other):
        return self.like(self.data + other.data)

    def __sub__(self, other):
        return self.like(self.data - other.data)

    def __mul__(self, scalar):
        return self.like(self.data * scalar)

    __rmul__ = __mul__

    def mode(self, p, q):
        """(3, Nz) vertical profile of lateral mode (p, q)."""
        i, j = self.lateral.index(p, q)
        return self.data[:, i, j, :]

    def trace(self, side):
        """Lateral modal trace at z = +h (``"top"``) or z = -h (``"bottom"``)."""
        return self.data[..., 0] if side == "top" else self.data[..., -1]


def _check_lateral(arr, lateral):
    if tuple(arr.shape[-3:-1]) != lateral.shape:
        raise ShapeError(f"lateral shape {arr.shape[-3:-1]} != {lateral.shape}")


def to_modal(nodal, lateral, vertical=None):
    """Lateral forward transform of a quasiperiodic field sampled on the grid.

    ``nodal`` has shape (..., Nx, Ny, Nz). Returns a :class:`VectorField` when
    the leading axis has length 3 and ``vertical`` is given, otherwise the raw
    coefficient array.
    """
    nodal = np.asarray(nodal, dtype=complex)
    _check_lateral(nodal, lateral)
    periodic = nodal * np.conj(lateral.phase())[..., None]
    coeffs = np.fft.fft2(periodic, axes=(-3, -2)) / (lateral.Nx * lateral.Ny)
    if vertical is not None and coeffs.ndim == 4 and coeffs.shape[0] == 3:
        return VectorField(coeffs, lateral, vertical)
    return coeffs


def to_nodal(modal, lateral):
    """Inverse of :func:`to_modal`; accepts a VectorField or raw coefficients."""
    coeffs = modal.data if isinstance(modal, VectorField) else np.asarray(modal)
    _check_lateral(coeffs, lateral)
    periodic = np.fft.ifft2(coeffs, axes=(-3, -2)) * (lateral.Nx * lateral.Ny)
    return periodic * lateral.phase()[..., None]


def _padded_size(n):
    return (3 * n + 1) // 2


def _pad(coeffs, M):
    """Zero-pad FFT-ordered coefficients on axes (-3, -2) to sizes M."""
    Nx, Ny = coeffs.shape[-3:-1]
    Mx, My = M
    out = np.zeros(coeffs.shape[:-3] + (Mx, My, coeffs.shape[-1]), complex)
    px = np.rint(np.fft.fftfreq(Nx, 1.0 / Nx)).astype(int)
    qy = np.rint(np.fft.fftfreq(Ny, 1.0 / Ny)).astype(int)
    out[..., (px % Mx)[:, None], (qy % My)[None, :], :] = coeffs
    return out


def _truncate(coeffs, N):
    Nx, Ny = N
    Mx, My = coeffs.shape[-3:-1]
    px = np.rint(np.fft.fftfreq(Nx, 1.0 / Nx)).astype(int)
    qy = np.rint(np.fft.fftfreq(Ny, 1.0 / Ny)).astype(int)
    return coeffs[..., (px % Mx)[:, None], (qy % My)[None, :], :]


def _symmetric_envelope_coeffs(env_nodal, lateral, M):
    """Padded Fourier coefficients of a periodic scalar with Nyquist halves split.

    Splitting the Nyquist coefficient evenly between +-N/2 keeps the
    interpolant of a real envelope real, so the truncated multiplication
    operator stays Hermitian.
    """
    Nx, Ny = lateral.shape
    c = np.fft.fft2(np.asarray(env_nodal, dtype=complex), axes=(-3, -2)) / (Nx * Ny)
    out = _pad(c, M)
    Mx, My = M
    if Nx % 2 == 0:
        src = out[..., (-Nx // 2) % Mx, :, :].copy()
        out[..., (-Nx // 2) % Mx, :, :] = 0.5 * src
        out[..., (Nx // 2) % Mx, :, :] += 0.5 * src
    if Ny % 2 == 0:
        src = out[..., :, (-Ny // 2) % My, :].copy()
        out[..., :, (-Ny // 2) % My, :] = 0.5 * src
        out[..., :, (Ny // 2) % My, :] += 0.5 * src
    return out


def lateral_product(a, b, lateral, dealias=True):
    """Pointwise product of a periodic scalar ``a`` with a quasiperiodic field ``b``.

    ``a`` holds nodal samples of shape (Nx, Ny, Nz) (lateral nodes, vertical
    nodes); ``b`` is a VectorField or a modal array of shape (..., Nx, Ny, Nz).
    With ``dealias`` the product is formed on a 3/2 zero-padded grid and then
    truncated, which is exact for the band-limited interpolants.
    """
    is_field = isinstance(b, VectorField)
    coeffs = b.data if is_field else np.asarray(b, dtype=complex)
    _check_lateral(coeffs, lateral)
    a = np.asarray(a)
    if a.shape != coeffs.shape[-3:]:
        raise ShapeError(f"envelope shape {a.shape} != field shape {coeffs.shape[-3:]}")
    Nx, Ny = lateral.shape
    if not dealias:
        periodic = np.fft.ifft2(coeffs, axes=(-3, -2)) * (Nx * Ny)
        out = np.fft.fft2(a * periodic, axes=(-3, -2)) / (Nx * Ny)
    else:
        M = (_padded_size(Nx), _padded_size(Ny))
        scale = M[0] * M[1]
        fine_b = np.fft.ifft2(_pad(coeffs, M), axes=(-3, -2)) * scale
        fine_a = np.fft.ifft2(_symmetric_envelope_coeffs(a, lateral, M), axes=(-3, -2)) * scale
        out = _truncate(np.fft.fft2(fine_a * fine_b, axes=(-3, -2)) / scale, (Nx, Ny))
    return b.like(out) if is_field else out


def sobolev_norm(u, s):
    """Volumetric laterally quasiperiodic H^s norm (integer s in 0..4).

    ||u||_s^2 = sum_{j<=s} sum_{p,q} <(p,q)>^{2(s-j)} int |d_z^j u_hat_pq|^2 dz,
    with the three Cartesian components summed inside |.|^2 and the z
    integral evaluated by Clenshaw-Curtis quadrature.
    """
    if int(s) != s or not 0 <= s <= 4:
        raise ValueError("volumetric Sobolev index must be an integer in [0, 4]")
    s = int(s)
    weight = u.lateral.weight()
    vert = u.vertical
    total = 0.0
    deriv = u.data
    for j in range(s + 1):
        if j:
            deriv = vert.derivative(deriv)
        dens = np.sum(np.abs(deriv) ** 2, axis=0)
        total += np.sum(weight ** (s - j) * vert.integrate(dens))
    return float(np.sqrt(total))


def interfacial_norm(trace, s, lateral):
    """Interfacial H^s norm of a modal trace of shape (3, Nx, Ny) or (Nx, Ny)."""
    trace = np.asarray(trace)
    dens = np.abs(trace) ** 2
    if dens.ndim == 3:
        dens = dens.sum(axis=0)
    return float(np.sqrt(np.sum(lateral.weight() ** s * dens)))


def divergence(u):
    """Modal divergence i alpha_p u^x + i beta_q u^y + d_z u^z, shape (Nx, Ny, Nz)."""
    lat = u.lateral
    return (
        1j * lat.alpha_p[:, None, None] * u.x
        + 1j * lat.beta_q[None, :, None] * u.y
        + u.vertical.derivative(u.z)
    )
