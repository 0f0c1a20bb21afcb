import numpy as np
import pytest

from cpband.band import build_band
from cpband.geometry import MobiusStrip, Sphere, UpperHemisphere
from cpband.operators import build_operators


@pytest.fixture(scope="session")
def hemisphere():
    return UpperHemisphere(1.0)


@pytest.fixture(scope="session")
def mobius():
    return MobiusStrip(1.0, 0.35)


@pytest.fixture(scope="session")
def sphere():
    return Sphere(1.0)


# acceptance criterion number -> (passed, one-line detail), reported after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}")


_bands = {}
_ops = {}


def band(surface, dx):
    """Cached (grid, classification) pair."""
    key = (surface, dx)
    if key not in _bands:
        _bands[key] = build_band(surface, dx)
    return _bands[key]


def band_and_ops(surface, dx, conormal="approx"):
    """Cached (grid, classification, operators) triple."""
    key = (surface, dx, conormal)
    if key not in _ops:
        grid, cls = band(surface, dx)
        _ops[key] = (grid, cls, build_operators(grid, cls, surface, conormal=conormal))
    return _ops[key]


def drop_cached_operators():
    """Free cached operators (bands stay); used before memory-hungry runs."""
    _ops.clear()


@pytest.fixture(scope="session")
def hemi01(hemisphere):
    return band_and_ops(hemisphere, 0.1)


@pytest.fixture(scope="session")
def mobius01(mobius):
    return band_and_ops(mobius, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
