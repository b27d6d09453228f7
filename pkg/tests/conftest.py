import numpy as np
import pytest

from coulombgas import determinantal as det
from coulombgas import equilibrium as eqm
from coulombgas import potential as pot


@pytest.fixture(scope="session")
def ginibre():
    return pot.ginibre()


@pytest.fixture(scope="session")
def ginibre_radial():
    _, eq = eqm.solve_radial(pot.ginibre())
    return eq


@pytest.fixture(scope="session")
def ginibre_grid():
    return eqm.solve_grid(pot.ginibre(), eqm.GridDomain.square(2.0, 256), workers=2)


@pytest.fixture(scope="session")
def elliptic_grid():
    return eqm.solve_grid(pot.elliptic(0.5), eqm.GridDomain.square(2.0, 256), workers=2)


@pytest.fixture(scope="session")
def power2_grid():
    return eqm.solve_grid(pot.power(2.0), eqm.GridDomain.square(2.0, 256), workers=2)


@pytest.fixture(scope="session")
def ensembles():
    cache = {}

    def get(name, n):
        key = (name, n)
        if key not in cache:
            p = pot.ginibre() if name == "ginibre" else pot.power(2.0)
            cache[key] = det.build_ensemble(p, n)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# ------------------------------------------------------------ acceptance lines

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(key, ok, detail):
        _ACCEPTANCE[key] = f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int(str(k).split(".")[0]), str(k))):
        terminalreporter.write_line(_ACCEPTANCE[key])
