import numpy as np
import pytest

from dwdg_ocp.mesh import build_crisscross


def collapsed_gauss(n):
    """Tensor Gauss-Legendre rule pulled back to the reference triangle (Duffy map).

    Independent of the symmetric tables in the package; exact for
    polynomials of degree 2n - 2 on the triangle.
    """
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1)
    w = 0.5 * w
    a, b = np.meshgrid(s, s, indexing="ij")
    wa, wb = np.meshgrid(w, w, indexing="ij")
    x = a.ravel()
    y = (b * (1 - a)).ravel()
    weights = (wa * wb * (1 - a)).ravel()
    return np.stack([x, y], axis=1), weights


def fitted_rate(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


@pytest.fixture(scope="session")
def meshes():
    cache = {}

    def get(N):
        if N not in cache:
            cache[N] = build_crisscross(N)
        return cache[N]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance run report")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)
