import math

import numpy as np
import pytest

from dclab.extensions import cd_constants
from dclab.greenop import build_green_operator
from dclab.homogeneous import Coupling, build_fundamental_system

# pass/fail lines collected by the acceptance tests
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def c09():
    return Coupling(0.9, 1)


@pytest.fixture(scope="session")
def F09(c09):
    return build_fundamental_system(c09)


@pytest.fixture(scope="session")
def G09(c09):
    return build_green_operator(c09)


@pytest.fixture(scope="session")
def cd09(c09, G09):
    return cd_constants(c09, G09)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240617)


def smooth_spinor(grid, rng, complex_=True):
    """Random smooth spinor vanishing at the origin and decaying at infinity."""
    a = rng.uniform(0.3, 2.0, 6)
    k = rng.integers(1, 4, 2)
    r = grid.nodes
    up = a[0] * r ** k[0] * np.exp(-a[1] * r) * (1 + 0.3 * np.sin(a[2] * r))
    lo = a[3] * r ** k[1] * np.exp(-a[4] * r ** 1.5)
    if complex_:
        up = up + 1j * a[5] * r ** 2 * np.exp(-r)
    return up, lo


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def log_bump(r, a, b):
    """Smooth bump supported on (a, b), built in the variable log r."""
    y = np.zeros_like(r, dtype=float)
    m = (r > a) & (r < b)
    t = (np.log(r[m]) - math.log(a)) / (math.log(b) - math.log(a))
    y[m] = np.exp(-1.0 / (t * (1.0 - t)))
    return y


def random_compact_spinor(grid, rng):
    """Compactly supported smooth spinor with a log-uniform random support."""
    from dclab.radial import SpinorFunction
    a = 10 ** rng.uniform(-6, -1)
    b = a * 10 ** rng.uniform(0.3, 2.5)
    cu, cl = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    bump = log_bump(grid.nodes, a, b)
    return SpinorFunction(grid, cu * bump, cl * bump), (a, b)
