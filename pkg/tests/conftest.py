import math

import pytest

from hope.config import NumericalParams, ScatteringConfig
from hope.driver import HopeProblem, run_hope
from hope.envelope import Constant, TanhSlabGap

TANH_K0 = 4 * math.pi / 3  # wavelength 1.5 on period 2: no mode near cutoff


@pytest.fixture(scope="session")
def constant_run():
    """Uniform slab eps_bar (1 - delta), matched exterior, 10 orders."""
    cfg = ScatteringConfig(k0=2 * math.pi, h=1.0, delta=0.05, theta=0.3, d_x=0.9, d_y=0.9)
    pb = HopeProblem.build(cfg, NumericalParams(8, 8, 32, 10), Constant(1.0))
    return pb, run_hope(pb)


@pytest.fixture(scope="session")
def tanh_run():
    cfg = ScatteringConfig(k0=TANH_K0, h=1.0, d_x=2.0, d_y=2.0, theta=math.radians(10))
    pb = HopeProblem.build(cfg, NumericalParams(16, 16, 32, 12), TanhSlabGap(0.25, 0.1, 50.0))
    return pb, run_hope(pb)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
