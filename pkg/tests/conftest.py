import math

import numpy as np
import pytest
from hypothesis import settings

from seqgibbs.potentials import LocallyConstant, Renewal
from seqgibbs.shift import FactorMap
from seqgibbs.thermo import MarkovMeasure, solve, truncate

settings.register_profile("suite", max_examples=40, deadline=None)
settings.load_profile("suite")

LUMPABLE_P = np.array([[0.2, 0.3, 0.5], [0.4, 0.1, 0.5], [0.3, 0.3, 0.4]])


def random_stochastic(rng: np.random.Generator, q: int) -> np.ndarray:
    M = rng.random((q, q)) + 0.05
    return M / M.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def lump_psi():
    return LocallyConstant.from_transition_matrix(LUMPABLE_P)


@pytest.fixture(scope="session")
def lump_pi():
    return FactorMap(3, 2, (0, 0, 1))


@pytest.fixture(scope="session")
def lump_eig(lump_psi):
    return solve(lump_psi)


@pytest.fixture(scope="session")
def lump_mu(lump_eig):
    return MarkovMeasure(lump_eig, "equilibrium")


@pytest.fixture(scope="session")
def hofbauer():
    return Renewal(params={"c": 2.0})


@pytest.fixture(scope="session")
def hofbauer12(hofbauer):
    psi12, err = truncate(hofbauer, 12)
    eig = solve(psi12)
    return psi12, err, eig


@pytest.fixture(scope="session")
def stationary():
    def _pi(P):
        vals, vecs = np.linalg.eig(np.asarray(P).T)
        v = np.abs(vecs[:, np.argmin(np.abs(vals - 1.0))].real)
        return v / v.sum()
    return _pi


def close(a, b, rel=1e-10, abs_=0.0):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


# criterion number -> (passed, description)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, passed: bool, detail: str) -> bool:
    ACCEPTANCE[n] = (bool(passed), detail)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
