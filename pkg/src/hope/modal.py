"""Per-mode two-point boundary value problems.

For every lateral mode the vector problem

    curl curl v - k0^2 eps_bar v = F,
    -d_z v - T_u[v] = Q (z = h),   d_z v - T_w[v] = R (z = -h)

reduces to two scalar Robin problems for v^x, v^y

    v'' + gamma^2 v = H (resp. L),
    v'(h) - i gamma_u v(h) = -Q,   v'(-h) + i gamma_w v(-h) = R,

followed by the algebraic reconstruction

    v^z = (-F^z + i alpha_p v^x' + i beta_q v^y') / gamma^2.

Two backends solve the scalar problems: Chebyshev collocation (production)
and the closed-form Green's function representation (oracle).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boundary import relative_determinant
from .errors import NearSingularMode, WoodAnomaly
from .spectral import VectorField, barycentric_matrix, cheb_nodes, clenshaw_curtis_weights

log = logging.getLogger(__name__)


def transverse_forcing(Fx, Fy, dFz, alpha_p, beta_q, k2eps):
    """H and L of the reduced problems; broadcasts over modes."""
    ab = alpha_p * beta_q
    H = (ab * Fy + (alpha_p**2 - k2eps) * Fx - 1j * alpha_p * dFz) / k2eps
    L = (ab * Fx + (beta_q**2 - k2eps) * Fy - 1j * beta_q * dFz) / k2eps
    return H, L


def reconstruct_z(Fz, dvx, dvy, alpha_p, beta_q, gamma_bar):
    return (-Fz + 1j * alpha_p * dvx + 1j * beta_q * dvy) / gamma_bar**2


@dataclass
class ModalRHS:
    """Data of one mode's reduced problem, sampled on the vertical grid."""

    H: np.ndarray
    L: np.ndarray
    Q: np.ndarray  # (3,)
    R: np.ndarray  # (3,)
    F: np.ndarray  # (3, Nz)
    dFz: np.ndarray

    @classmethod
    def zeros(cls, nz):
        z = np.zeros(nz, complex)
        return cls(z, z.copy(), np.zeros(3, complex), np.zeros(3, complex),
                   np.zeros((3, nz), complex), z.copy())


def assemble_modal_rhs(F, Q, R, mode, vertical):
    """Build the reduced right-hand side of mode (p, q).

    ``F`` is the modal forcing (VectorField or (3, Nx, Ny, Nz) array), ``Q``
    and ``R`` are modal traces of shape (3, Nx, Ny) or None for zero data.
    """
    data = F.data if isinstance(F, VectorField) else np.asarray(F)
    Nx, Ny = data.shape[1:3]
    i, j = mode.p % Nx, mode.q % Ny
    Fm = np.array(data[:, i, j, :], dtype=complex)
    dFz = vertical.derivative(Fm[2])
    H, L = transverse_forcing(Fm[0], Fm[1], dFz, mode.alpha_p, mode.beta_q, mode.k2eps)
    Qm = np.zeros(3, complex) if Q is None else np.array(Q[:, i, j], dtype=complex)
    Rm = np.zeros(3, complex) if R is None else np.array(R[:, i, j], dtype=complex)
    return ModalRHS(H, L, Qm, Rm, Fm, dFz)


def _check_mode(mode, wood_tol):
    for name in ("gamma_bar", "gamma_u", "gamma_w"):
        g = getattr(mode, name)
        if abs(g) < wood_tol:
            raise WoodAnomaly(mode.p, mode.q, name.split("_")[1], g)
    rel = float(relative_determinant(mode.gamma_bar, mode.gamma_u, mode.gamma_w, mode.h))
    if rel < wood_tol:
        raise NearSingularMode(mode.p, mode.q, rel)


# ---------------------------------------------------------------------------
# collocation backend


def collocation_matrix(mode, vertical):
    """Dense collocation operator with Robin rows in place of the end equations."""
    n = vertical.Nz
    M = vertical.D2 + mode.gamma_bar**2 * np.eye(n)
    M = M.astype(complex)
    M[0] = vertical.D1[0]
    M[0, 0] -= 1j * mode.gamma_u
    M[-1] = vertical.D1[-1]
    M[-1, -1] += 1j * mode.gamma_w
    return M


def solve_mode_collocation(rhs, mode, vertical, wood_tol=1e-8):
    """Collocation solve of one mode; returns the (3, Nz) profile (v^x, v^y, v^z)."""
    _check_mode(mode, wood_tol)
    M = collocation_matrix(mode, vertical)
    b = np.stack([rhs.H, rhs.L], axis=1).astype(complex)
    b[0] = -rhs.Q[:2]
    b[-1] = rhs.R[:2]
    try:
        sol = np.linalg.solve(M, b)
    except np.linalg.LinAlgError:
        raise NearSingularMode(mode.p, mode.q) from None
    dsol = vertical.D1 @ sol
    vz = reconstruct_z(rhs.F[2], dsol[:, 0], dsol[:, 1], mode.alpha_p, mode.beta_q, mode.gamma_bar)
    return np.stack([sol[:, 0], sol[:, 1], vz])


# ---------------------------------------------------------------------------
# Green's function backend


@dataclass(frozen=True)
class GreensKernel:
    """Closed-form pieces of the scalar Robin problem for one mode.

    With kappa = -i gamma_bar (so Re kappa >= 0 on both branches) and
    kappa_m = -i gamma_m the homogeneous solutions are

        y_b(z) = a e^{kappa (z+h)} + b e^{-kappa (z+h)}   (bottom Robin row)
        y_t(z) = c e^{kappa (z-h)} + d e^{-kappa (z-h)}   (top Robin row)

    with a = kappa + kappa_w, b = kappa - kappa_w, c = kappa - kappa_u,
    d = kappa + kappa_u and Wronskian -2 kappa D,
    D = a d e^{2 kappa h} - b c e^{-2 kappa h}. Every stored quantity is
    divided by e^{2 kappa h}, so evaluated exponentials never exceed one in
    modulus.
    """

    kappa: complex
    kappa_u: complex
    kappa_w: complex
    h: float
    a: complex
    b: complex
    c: complex
    d: complex
    D_scaled: complex  # D * exp(-2 kappa h)

    @classmethod
    def from_mode(cls, mode):
        k = -1j * mode.gamma_bar
        ku = -1j * mode.gamma_u
        kw = -1j * mode.gamma_w
        a, b, c, d = k + kw, k - kw, k - ku, k + ku
        Ds = a * d - b * c * np.exp(-4 * k * mode.h)
        return cls(k, ku, kw, mode.h, a, b, c, d, Ds)

    @property
    def D(self):
        """Unscaled determinant (may overflow for deep evanescent modes)."""
        return self.D_scaled * np.exp(2 * self.kappa * self.h)

    def phi_h(self, z):
        """y_b / D: solves the homogeneous bottom condition."""
        k, h = self.kappa, self.h
        z = np.asarray(z)
        return (self.a * np.exp(k * (z - h)) + self.b * np.exp(-k * (z + 3 * h))) / self.D_scaled

    def dphi_h(self, z):
        k, h = self.kappa, self.h
        z = np.asarray(z)
        return k * (self.a * np.exp(k * (z - h)) - self.b * np.exp(-k * (z + 3 * h))) / self.D_scaled

    def phi_mh(self, z):
        """y_t / (2 kappa): solves the homogeneous top condition, equals 1 at z = h."""
        k, h = self.kappa, self.h
        z = np.asarray(z)
        return (self.c * np.exp(k * (z - h)) + self.d * np.exp(-k * (z - h))) / (2 * k)

    def dphi_mh(self, z):
        k, h = self.kappa, self.h
        z = np.asarray(z)
        return (self.c * np.exp(k * (z - h)) - self.d * np.exp(-k * (z - h))) / 2

    def top_profile(self, z):
        """y_t / D, rescaled, and its derivative."""
        k, h = self.kappa, self.h
        e1 = self.c * np.exp(k * (z - 3 * h))
        e2 = self.d * np.exp(-k * (z + h))
        return (e1 + e2) / self.D_scaled, k * (e1 - e2) / self.D_scaled

    def kernel(self, lo, hi, wrt=None):
        """y_b(lo) y_t(hi) / D for lo <= hi, or its derivative in ``lo``/``hi``."""
        k, h = self.kappa, self.h
        t1 = self.a * self.c * np.exp(k * (lo + hi - 2 * h))
        t2 = self.a * self.d * np.exp(k * (lo - hi))
        t3 = self.b * self.c * np.exp(k * (hi - lo - 4 * h))
        t4 = self.b * self.d * np.exp(-k * (lo + hi + 2 * h))
        if wrt is None:
            return (t1 + t2 + t3 + t4) / self.D_scaled
        if wrt == "hi":
            return k * (t1 - t2 + t3 - t4) / self.D_scaled
        return k * (t1 + t2 - t3 - t4) / self.D_scaled


def _quadrature_order(kernel, nz):
    return int(nz // 2 + abs(kernel.kappa) * kernel.h + 24)


def _interpolate(B, values):
    # real matrix times complex data without promoting B to complex
    k = values.shape[1]
    out = B @ np.concatenate([values.real, values.imag], axis=1)
    return out[..., :k] + 1j * out[..., k:]


def greens_scalar(kernel, zeta, Q, R, vertical, m=None):
    """Evaluate v and v' of the scalar Robin problem at the vertical nodes.

    v(z) = -Q phi_h(z) - R y_t(z)/D - I_h[zeta](z) - I_{-h}[zeta](z), with the
    two partial integrals computed by Clenshaw-Curtis rules on [-h, z] and
    [z, h] and ``zeta`` interpolated from its nodal samples. ``zeta`` may
    carry a trailing axis of several right-hand sides (then ``Q`` and ``R``
    are arrays of matching length); they share one kernel evaluation.
    """
    z = vertical.z
    h = vertical.h
    zeta = np.asarray(zeta)
    single = zeta.ndim == 1
    zeta = zeta.reshape(len(z), -1)
    Q = np.atleast_1d(Q)
    R = np.atleast_1d(R)
    m = _quadrature_order(kernel, vertical.Nz) if m is None else m
    t = cheb_nodes(m)
    w = clenshaw_curtis_weights(m)
    # lower segment [-h, z_i], upper segment [z_i, h]
    half_lo = 0.5 * (z + h)
    half_hi = 0.5 * (h - z)
    s_lo = (-h + half_lo)[:, None] + half_lo[:, None] * t[None, :]
    s_hi = (z + half_hi)[:, None] + half_hi[:, None] * t[None, :]
    w_lo = half_lo[:, None] * w[None, :]
    w_hi = half_hi[:, None] * w[None, :]
    interp_lo = _interpolate(barycentric_matrix(z / h, s_lo / h), zeta)  # (Nz, m, k)
    interp_hi = _interpolate(barycentric_matrix(z / h, s_hi / h), zeta)
    zc = z[:, None]
    scale = 1.0 / (2 * kernel.kappa)
    K_lo = w_lo * kernel.kernel(s_lo, zc)
    K_hi = w_hi * kernel.kernel(zc, s_hi)
    dK_lo = w_lo * kernel.kernel(s_lo, zc, wrt="hi")
    dK_hi = w_hi * kernel.kernel(zc, s_hi, wrt="lo")
    I = np.einsum("im,imk->ik", K_lo, interp_lo) + np.einsum("im,imk->ik", K_hi, interp_hi)
    dI = np.einsum("im,imk->ik", dK_lo, interp_lo) + np.einsum("im,imk->ik", dK_hi, interp_hi)
    yt, dyt = kernel.top_profile(z)
    v = -Q * kernel.phi_h(z)[:, None] - R * yt[:, None] - scale * I
    dv = -Q * kernel.dphi_h(z)[:, None] - R * dyt[:, None] - scale * dI
    if single:
        return v[:, 0], dv[:, 0]
    return v, dv


def solve_mode_greens(rhs, mode, vertical, wood_tol=1e-8, m=None):
    """Green's-function solve of one mode; same output as the collocation backend."""
    _check_mode(mode, wood_tol)
    kern = GreensKernel.from_mode(mode)
    v, dv = greens_scalar(kern, np.stack([rhs.H, rhs.L], axis=1), rhs.Q[:2], rhs.R[:2], vertical, m)
    vz = reconstruct_z(rhs.F[2], dv[:, 0], dv[:, 1], mode.alpha_p, mode.beta_q, mode.gamma_bar)
    return np.stack([v[:, 0], v[:, 1], vz])


# ---------------------------------------------------------------------------
# whole-field solvers


class CollocationSolver:
    """Batched collocation solves over all retained modes.

    The operators depend only on the mode table, so they are assembled once
    and reused for every perturbation order.
    """

    name = "collocation"

    def __init__(self, table, vertical, wood_tol=1e-8, threads=1):
        self.table = table
        self.vertical = vertical
        self.threads = max(1, int(threads))
        lat = table.lateral
        self._alpha = np.broadcast_to(lat.alpha_p[:, None], lat.shape).ravel()
        self._beta = np.broadcast_to(lat.beta_q[None, :], lat.shape).ravel()
        self._gamma = table.gamma["bar"].ravel()
        for mode in table.modes():
            _check_mode(mode, wood_tol)
        n = vertical.Nz
        gu = table.gamma["u"].ravel()
        gw = table.gamma["w"].ravel()
        M = np.broadcast_to(vertical.D2, (gu.size, n, n)).astype(complex)
        M += self._gamma[:, None, None] ** 2 * np.eye(n)
        M[:, 0, :] = vertical.D1[0]
        M[:, 0, 0] -= 1j * gu
        M[:, -1, :] = vertical.D1[-1]
        M[:, -1, -1] += 1j * gw
        self._matrices = M

    def _solve_chunk(self, sl, b):
        return np.linalg.solve(self._matrices[sl], b[sl])

    def solve(self, F, Q=None, R=None):
        """Solve for all modes. ``F`` is a VectorField; ``Q``, ``R`` traces or None."""
        vert = self.vertical
        lat = self.table.lateral
        nm = lat.Nx * lat.Ny
        n = vert.Nz
        Fd = F.data.reshape(3, nm, n)
        dFz = vert.derivative(Fd[2])
        H, L = transverse_forcing(Fd[0], Fd[1], dFz, self._alpha[:, None], self._beta[:, None],
                                  self.table.k0**2 * self.table.eps["bar"])
        b = np.stack([H, L], axis=-1)
        b[:, 0, :] = 0.0 if Q is None else -np.asarray(Q)[:2].reshape(2, nm).T
        b[:, -1, :] = 0.0 if R is None else np.asarray(R)[:2].reshape(2, nm).T
        if self.threads == 1:
            sol = np.linalg.solve(self._matrices, b)
        else:
            bounds = np.linspace(0, nm, self.threads + 1).astype(int)
            slices = [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(lambda sl: self._solve_chunk(sl, b), slices))
            sol = np.concatenate(parts, axis=0)
        vx, vy = sol[..., 0], sol[..., 1]
        dvx, dvy = vert.derivative(vx), vert.derivative(vy)
        vz = reconstruct_z(Fd[2], dvx, dvy, self._alpha[:, None], self._beta[:, None],
                           self._gamma[:, None])
        data = np.stack([vx, vy, vz]).reshape(3, lat.Nx, lat.Ny, n)
        return VectorField(data, lat, vert)


class GreensSolver:
    """Mode-by-mode Green's function evaluation (slow; verification backend)."""

    name = "greens"

    def __init__(self, table, vertical, wood_tol=1e-8, threads=1):
        self.table = table
        self.vertical = vertical
        self.wood_tol = wood_tol
        self.threads = max(1, int(threads))
        for mode in table.modes():
            _check_mode(mode, wood_tol)

    def _one(self, mode, F, Q, R):
        rhs = assemble_modal_rhs(F, Q, R, mode, self.vertical)
        return solve_mode_greens(rhs, mode, self.vertical, self.wood_tol)

    def solve(self, F, Q=None, R=None):
        lat = self.table.lateral
        modes = list(self.table.modes())
        if self.threads == 1:
            profiles = [self._one(m, F, Q, R) for m in modes]
        else:
            with ThreadPoolExecutor(self.threads) as pool:
                profiles = list(pool.map(lambda m: self._one(m, F, Q, R), modes))
        data = np.stack(profiles, axis=1).reshape(3, lat.Nx, lat.Ny, self.vertical.Nz)
        return VectorField(data, lat, self.vertical)


BACKENDS = {"collocation": CollocationSolver, "greens": GreensSolver}


def make_solver(backend, table, vertical, wood_tol=1e-8, threads=1):
    try:
        cls = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return cls(table, vertical, wood_tol=wood_tol, threads=threads)
