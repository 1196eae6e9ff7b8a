"""Problem description, validation and config-file loading."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import envelope as env_mod
from .errors import ConfigError, InvalidPolarization, NearSingularMode, WoodAnomaly
from .spectral import LateralGrid, VerticalGrid, vertical_wavenumber


def default_polarization(theta, phi_angle):
    """Unit vector normal to the plane of incidence (TE); satisfies A . kappa = 0."""
    return np.array([-math.sin(phi_angle), math.cos(phi_angle), 0.0], dtype=complex)


@dataclass(frozen=True)
class ScatteringConfig:
    k0: float
    eps_u: float = 1.0
    eps_w: float = 1.0
    eps_bar: float = 1.0
    delta: float = 0.0
    d_x: float = 1.0
    d_y: float = 1.0
    h: float = 1.0
    theta: float = 0.0
    phi_angle: float = 0.0
    A: np.ndarray | None = None

    def __post_init__(self):
        for name in ("k0", "eps_u", "eps_w", "eps_bar", "d_x", "d_y", "h"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be a positive real number, got {val!r}")
        if not np.isfinite(self.delta):
            raise ConfigError("delta must be finite")
        if abs(math.cos(self.theta)) < 1e-12 or not 0 <= self.theta < math.pi / 2:
            raise ConfigError("theta must lie in [0, pi/2); grazing incidence is not supported")
        A = default_polarization(self.theta, self.phi_angle) if self.A is None else self.A
        A = np.array(A, dtype=complex).reshape(3)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    def __eq__(self, other):
        if not isinstance(other, ScatteringConfig):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    __hash__ = None

    @property
    def k_u(self):
        return math.sqrt(self.eps_u) * self.k0

    @property
    def alpha(self):
        return self.k_u * math.sin(self.theta) * math.cos(self.phi_angle)

    @property
    def beta(self):
        return self.k_u * math.sin(self.theta) * math.sin(self.phi_angle)

    @property
    def gamma_u(self):
        return self.k_u * math.cos(self.theta)

    @property
    def kappa(self):
        """Incident wavevector (alpha, beta, -gamma_u)."""
        return np.array([self.alpha, self.beta, -self.gamma_u])

    def magnetic_amplitude(self, omega_mu0=None):
        """B = kappa x A / (omega mu0); ``omega_mu0`` defaults to k_u so |B| = |A|."""
        scale = self.k_u if omega_mu0 is None else omega_mu0
        return np.cross(self.kappa, self.A) / scale

    def with_delta(self, delta):
        return replace(self, delta=delta)

    def as_dict(self):
        d = asdict(self)
        d["A"] = [[float(a.real), float(a.imag)] for a in self.A]
        return d


@dataclass(frozen=True)
class NumericalParams:
    Nx: int = 8
    Ny: int = 8
    Nz: int = 32
    L: int = 8
    wood_tol: float = 1e-8
    dealias: bool = True

    def __post_init__(self):
        if self.Nx < 2 or self.Ny < 2:
            raise ConfigError("Nx and Ny must be >= 2")
        if self.Nx % 2 or self.Ny % 2:
            raise ConfigError("Nx and Ny must be even")
        if self.Nz < 4:
            raise ConfigError("Nz must be >= 4")
        if self.L < 0:
            raise ConfigError("L must be >= 0")
        if not self.wood_tol > 0:
            raise ConfigError("wood_tol must be > 0")

    def as_dict(self):
        return asdict(self)


def lateral_grid(config, num):
    return LateralGrid(num.Nx, num.Ny, config.d_x, config.d_y, config.alpha, config.beta)


def vertical_grid(config, num):
    return VerticalGrid(num.Nz, config.h)


@dataclass(frozen=True)
class Issue:
    kind: str  # "wood_anomaly" | "near_singular" | "invalid_polarization"
    p: int | None = None
    q: int | None = None
    medium: str | None = None
    value: float | None = None

    def to_exception(self):
        if self.kind == "wood_anomaly":
            return WoodAnomaly(self.p, self.q, self.medium, self.value)
        if self.kind == "near_singular":
            return NearSingularMode(self.p, self.q, self.value)
        return InvalidPolarization(f"incident polarization rejected: {self.medium} ({self.value:.3e})")


@dataclass(frozen=True)
class ValidationReport:
    alpha: float
    beta: float
    gamma_u: float
    wood_tol: float
    gammas: dict = field(repr=False)
    issues: tuple = ()

    @property
    def ok(self):
        return not self.issues

    def offending_modes(self):
        return sorted({(i.p, i.q) for i in self.issues if i.p is not None})

    def raise_for_status(self):
        if self.issues:
            raise self.issues[0].to_exception()
        return self


def validate(config, num):
    """Check polarization, Wood anomalies and near-singular modal problems.

    Pure: identical inputs give identical reports. Issues are listed in
    FFT mode order; nothing is raised (see ``raise_for_status``).
    """
    from .boundary import relative_determinant

    issues = []
    A = config.A
    norm_err = abs(np.linalg.norm(A) - 1.0)
    if norm_err > 1e-12:
        issues.append(Issue("invalid_polarization", medium="|A| != 1", value=norm_err))
    dot = abs(np.dot(config.kappa, A)) / config.k_u
    if dot > 1e-12:
        issues.append(Issue("invalid_polarization", medium="A . kappa != 0", value=dot))

    lat = lateral_grid(config, num)
    ap, bq = lat.alpha_p[:, None], lat.beta_q[None, :]
    gammas = {
        "u": vertical_wavenumber(config.eps_u, config.k0, ap, bq),
        "w": vertical_wavenumber(config.eps_w, config.k0, ap, bq),
        "bar": vertical_wavenumber(config.eps_bar, config.k0, ap, bq),
    }
    tol = num.wood_tol
    for medium in ("u", "w", "bar"):
        bad = np.abs(gammas[medium]) < tol
        for i, j in zip(*np.nonzero(bad)):
            issues.append(Issue("wood_anomaly", int(lat.p[i]), int(lat.q[j]), medium,
                                float(abs(gammas[medium][i, j]))))
    wood = np.zeros(lat.shape, bool)
    for g in gammas.values():
        wood |= np.abs(g) < tol
    rel = relative_determinant(gammas["bar"], gammas["u"], gammas["w"], config.h)
    for i, j in zip(*np.nonzero((rel < tol) & ~wood)):
        issues.append(Issue("near_singular", int(lat.p[i]), int(lat.q[j]), value=float(rel[i, j])))
    return ValidationReport(config.alpha, config.beta, config.gamma_u, tol, gammas, tuple(issues))


# ---------------------------------------------------------------------------
# config files

_SCATTERING_KEYS = {"k0", "eps_u", "eps_w", "eps_bar", "delta", "d_x", "d_y", "h",
                    "theta", "phi_angle", "A"}
_NUMERIC_KEYS = {"Nx", "Ny", "Nz", "L", "wood_tol", "dealias"}


def _parse_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex entries are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def parse_envelope(spec, base_dir="."):
    """Build an EnvelopeSpec from a config-file table."""
    if spec is None:
        return env_mod.Constant(0.0)
    kind = spec.get("type", "constant").lower()
    if kind == "constant":
        return env_mod.Constant(float(spec.get("c", 0.0)))
    if kind in ("tanh_slab_gap", "tanhslabgap"):
        return env_mod.TanhSlabGap(
            float(spec.get("d", 0.25)), float(spec.get("g", 0.1)),
            float(spec.get("w", 50.0)), float(spec.get("x_center", 0.0)),
        )
    if kind == "tabulated":
        path = Path(base_dir) / spec["file"]
        shape = tuple(int(n) for n in spec["shape"])
        return env_mod.Tabulated.from_file(path, shape)
    if kind in ("product", "sum"):
        parts = tuple(parse_envelope(s, base_dir) for s in spec["parts"])
        return env_mod.Product(parts) if kind == "product" else env_mod.Sum(parts)
    raise ConfigError(f"unknown envelope type {kind!r}")


def _read_table(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            raise ConfigError(f"{path}: not valid TOML or JSON ({exc})") from None


def config_from_dict(table, base_dir="."):
    """Split a parsed config table into (ScatteringConfig, NumericalParams, EnvelopeSpec).

    Angles are read in degrees. Unknown keys are rejected.
    """
    table = dict(table)
    numerics = dict(table.pop("numerics", {}))
    env_table = table.pop("envelope", None)
    unknown = set(table) - _SCATTERING_KEYS
    unknown |= set(numerics) - _NUMERIC_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "k0" not in table:
        raise ConfigError("config must set k0")
    kwargs = {k: float(v) for k, v in table.items() if k != "A"}
    kwargs["theta"] = math.radians(kwargs.get("theta", 0.0))
    kwargs["phi_angle"] = math.radians(kwargs.get("phi_angle", 0.0))
    if "A" in table:
        kwargs["A"] = np.array([_parse_complex(a) for a in table["A"]])
    try:
        cfg = ScatteringConfig(**kwargs)
        num = NumericalParams(**numerics)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, num, parse_envelope(env_table, base_dir)


def load_config(path):
    """Read a TOML (or JSON) config file; see README for the key reference."""
    path = Path(path)
    try:
        table = _read_table(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(table, base_dir=path.parent)
