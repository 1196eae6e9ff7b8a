"""Rayleigh amplitudes, diffraction efficiencies and series diagnostics.

Efficiencies use the z-directed power flux of each outgoing plane wave,
normalized by the incident flux (|A| = 1):

    e^R_pq = Re(gamma^(u)_pq) / gamma^(u) * |c_pq|^2,
    e^T_pq = Re(gamma^(w)_pq) / gamma^(u) * |w_pq|^2,

so only propagating modes contribute. The energy defect is
1 - sum e^R - sum e^T.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .boundary import outgoing_expansion
from .spectral import chebyshev_coefficients, sobolev_norm


@dataclass(frozen=True)
class Amplitudes:
    reflected: np.ndarray  # (3, Nx, Ny)
    transmitted: np.ndarray  # (3, Nx, Ny)


def rayleigh_amplitudes(E, config, table):
    """Reflected amplitudes from the z = h trace and transmitted ones from z = -h."""
    lat = table.lateral
    refl = outgoing_expansion(E.trace("top"), "u", config, lat)
    trans = outgoing_expansion(E.trace("bottom"), "w", config, lat)
    return Amplitudes(refl, trans)


@dataclass(frozen=True)
class EfficiencyTable:
    reflected: np.ndarray  # (Nx, Ny), zero on evanescent modes
    transmitted: np.ndarray
    propagating_u: np.ndarray  # bool masks
    propagating_w: np.ndarray

    @property
    def total_reflected(self):
        return float(self.reflected.sum())

    @property
    def total_transmitted(self):
        return float(self.transmitted.sum())

    @property
    def defect(self):
        return 1.0 - self.total_reflected - self.total_transmitted


def efficiencies(amps, table, config):
    gu0 = config.gamma_u
    flux_u = np.where(table.propagating["u"], table.gamma["u"].real, 0.0)
    flux_w = np.where(table.propagating["w"], table.gamma["w"].real, 0.0)
    eR = flux_u / gu0 * np.sum(np.abs(amps.reflected) ** 2, axis=0)
    eT = flux_w / gu0 * np.sum(np.abs(amps.transmitted) ** 2, axis=0)
    return EfficiencyTable(eR, eT, table.propagating["u"].copy(), table.propagating["w"].copy())


@dataclass(frozen=True)
class AnalyticityReport:
    norms: np.ndarray
    ratios: np.ndarray
    K: float
    B: float
    fit_start: int
    terminating: bool
    delta: float | None = None
    tail_ratio: float | None = None

    @property
    def b_delta(self):
        return None if self.delta is None else self.B * abs(self.delta)

    @property
    def within_radius(self):
        """True when the fitted B suggests |delta| < 1/B."""
        if self.terminating:
            return True
        return self.delta is not None and self.B * abs(self.delta) < 1.0


def fit_geometric(norms, start=2, stop=None):
    """Least-squares fit log ||E_l|| = log K + l log B over l in [start, stop]."""
    norms = np.asarray(norms, dtype=float)
    stop = len(norms) - 1 if stop is None else stop
    ell = np.arange(start, stop + 1)
    vals = norms[start:stop + 1]
    keep = vals > 0
    if keep.sum() < 2:
        return 0.0, 0.0
    slope, icpt = np.polyfit(ell[keep], np.log(vals[keep]), 1)
    return float(np.exp(icpt)), float(np.exp(slope))


def analyticity_report(series, delta=None, fit_start=2):
    """Fit ||E_l|| ~ K B^l (orders from ``fit_start`` on) and report the tail ratio.

    The tail ratio is ||E_L delta^L|| / ||E^L|| with the series' own norm.
    """
    if len(series) < 3:
        raise ValueError("analyticity_report needs at least three orders")
    norms = np.asarray(series.norms, dtype=float)
    scale = norms[0] if norms[0] > 0 else 1.0
    terminating = bool(np.all(norms[1:] <= 1e-14 * scale))
    if terminating:
        K, B = float(norms[0]), 0.0
    else:
        K, B = fit_geometric(norms, fit_start)
    tail = None
    if delta is not None:
        from .driver import taylor_sum

        total = sobolev_norm(taylor_sum(series, delta), series.norm_index)
        tail = float(norms[-1] * abs(delta) ** series.L / total) if total > 0 else 0.0
    return AnalyticityReport(norms, series.ratios(), K, B, fit_start, terminating, delta, tail)


@dataclass(frozen=True)
class DecayProbe:
    lateral_slope: float  # log10 decay per unit shell index max(|p|, |q|)
    vertical_slope: float  # log10 decay per Chebyshev index
    lateral_profile: np.ndarray = field(repr=False)
    vertical_profile: np.ndarray = field(repr=False)
    slow: bool = False
    # slope of (1 + r^2) * profile: removes the algebraic 1/gamma^2 gain of the
    # modal solves so the exponential rate can be compared with the envelope's
    compensated_lateral_slope: float = float("nan")


def _slope(profile, floor=1e-13):
    profile = np.asarray(profile, dtype=float)
    top = profile.max()
    if top == 0:
        return -np.inf
    idx = np.arange(len(profile))
    keep = profile > floor * top
    if keep.sum() < 2:
        return -np.inf
    return float(np.polyfit(idx[keep], np.log10(profile[keep]), 1)[0])


def lateral_shell_profile(coeffs, lateral):
    """max |coeff| over each shell max(|p|, |q|) = r; ``coeffs`` is (..., Nx, Ny, Nz)."""
    amp = np.abs(np.asarray(coeffs))
    amp = amp.reshape((-1,) + lateral.shape + (amp.shape[-1],)).max(axis=(0, -1))
    shell = np.maximum(np.abs(lateral.p)[:, None], np.abs(lateral.q)[None, :])
    rmax = int(shell.max())
    return np.array([amp[shell == r].max() for r in range(rmax + 1)])


def vertical_chebyshev_profile(coeffs):
    c = np.abs(chebyshev_coefficients(np.asarray(coeffs), axis=-1))
    return c.reshape(-1, c.shape[-1]).max(axis=0)


def _tail_fraction(profile):
    top = profile.max()
    return 0.0 if top == 0 else float(profile[-1] / top)


def spatial_decay_probe(series, ell, tail_tol=1e-3):
    """Decay rates of the lateral Fourier and vertical Chebyshev coefficients of E_l.

    Warns when the last lateral shell or the last Chebyshev coefficient is
    still above ``tail_tol`` times the largest one (unresolved / rough field).
    """
    E = series[ell]
    lat_prof = lateral_shell_profile(E.data, E.lateral)
    vert_prof = vertical_chebyshev_profile(E.data)
    slow = _tail_fraction(lat_prof) > tail_tol or _tail_fraction(vert_prof) > tail_tol
    if slow:
        warnings.warn(
            f"order {ell}: slow spectral decay (lateral tail {_tail_fraction(lat_prof):.2e}, "
            f"vertical tail {_tail_fraction(vert_prof):.2e}); the field is not resolved",
            UserWarning,
            stacklevel=2,
        )
    shells = np.arange(len(lat_prof))
    return DecayProbe(_slope(lat_prof), _slope(vert_prof), lat_prof, vert_prof, slow,
                      _slope(lat_prof * (1 + shells**2)))


def envelope_lateral_slope(env_nodal, lateral):
    coeffs = np.fft.fft2(env_nodal, axes=(0, 1)) / (lateral.Nx * lateral.Ny)
    return _slope(lateral_shell_profile(coeffs, lateral))


@dataclass(frozen=True)
class ScatteringResult:
    delta: float
    amplitudes: Amplitudes
    efficiency: EfficiencyTable
    series_report: AnalyticityReport | None
    residual: dict | None = None

    @property
    def energy_defect(self):
        return self.efficiency.defect


def scattering_result(series, problem, delta=None, L_use=None, with_residual=False):
    """Sum the series at ``delta`` and post-process."""
    from .driver import residual_check, taylor_sum

    delta = problem.config.delta if delta is None else delta
    E = taylor_sum(series, delta, L_use)
    amps = rayleigh_amplitudes(E, problem.config, problem.table)
    eff = efficiencies(amps, problem.table, problem.config)
    report = analyticity_report(series, delta) if len(series) >= 3 else None
    resid = residual_check(E, problem, delta) if with_residual else None
    return ScatteringResult(delta, amps, eff, report, resid)


def elliptic_ratio(v, F, Q, R, s=0):
    """||v||_{s+2} / (||F||_s + ||div F||_{s+1} + ||Q||_{s+1/2} + ||R||_{s+1/2}).

    Measured, not asserted: the a priori bound only states this stays below
    a fixed constant.
    """
    from .spectral import divergence, interfacial_norm

    lat = v.lateral
    div_F = F.like(np.stack([divergence(F), np.zeros_like(F.x), np.zeros_like(F.x)]))
    denom = (
        sobolev_norm(F, s)
        + sobolev_norm(div_F, s + 1)
        + (0.0 if Q is None else interfacial_norm(Q, s + 0.5, lat))
        + (0.0 if R is None else interfacial_norm(R, s + 0.5, lat))
    )
    return sobolev_norm(v, s + 2) / denom
