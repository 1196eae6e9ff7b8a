"""Exception hierarchy.

Every error carries a short machine-readable ``category`` used by the
command-line front end to pick an exit code.
"""


class HopeError(Exception):
    category = "error"


class ConfigError(HopeError, ValueError):
    category = "config"


class InvalidPolarization(ConfigError):
    category = "config"


class WoodAnomaly(HopeError):
    """A retained lateral mode sits (numerically) at its cutoff."""

    category = "wood_anomaly"

    def __init__(self, p, q, medium, gamma=None):
        self.p, self.q, self.medium, self.gamma = p, q, medium, gamma
        msg = f"Wood anomaly at mode (p, q) = ({p}, {q}) in medium {medium!r}"
        if gamma is not None:
            msg += f": |gamma| = {abs(gamma):.3e}"
        super().__init__(msg)


class NearSingularMode(HopeError):
    """The two-point Robin problem of a mode is (nearly) non-unique."""

    category = "wood_anomaly"

    def __init__(self, p, q, determinant=None):
        self.p, self.q, self.determinant = p, q, determinant
        msg = f"near-singular modal problem at (p, q) = ({p}, {q})"
        if determinant is not None:
            msg += f": relative determinant {determinant:.3e}"
        super().__init__(msg)


class DivergentSeries(HopeError):
    category = "divergent_series"


class ShapeError(HopeError, ValueError):
    category = "shape"
