"""Shared oracles for the test suite.

The helpers here rebuild walks densely from first principles (bit flips and
explicit coin formulas) without going through the package, so tests can
compare the package against an independent construction.
"""

import numpy as np
import pytest


def dense_hypercube_shift(n):
    """Permutation |v, j> -> |v ^ 2**j, j> built by looping over the basis."""
    N = 1 << n
    D = N * n
    s = np.zeros((D, D))
    for v in range(N):
        for j in range(n):
            s[(v ^ (1 << j)) * n + j, v * n + j] = 1.0
    return s


def dense_grover(d):
    g = np.empty((d, d))
    for r in range(d):
        for c in range(d):
            g[r, c] = 2.0 / d - (1.0 if r == c else 0.0)
    return g


def dense_dft(d):
    w = np.exp(2j * np.pi / d)
    return np.array([[w ** (r * c) for c in range(d)] for r in range(d)]) / np.sqrt(d)


def dense_walk(n, coin):
    """Dense ``U = S (I (x) C)`` for the n-cube, with C given as a d x d array."""
    return dense_hypercube_shift(n) @ np.kron(np.eye(1 << n), coin)


def final_projector(n, d=None):
    d = n if d is None else d
    N = 1 << n
    p = np.zeros((N * d, N * d))
    for j in range(d):
        i = (N - 1) * d + j
        p[i, i] = 1.0
    return p


def symmetric_start(n, d=None):
    d = n if d is None else d
    psi = np.zeros((1 << n) * d, dtype=complex)
    psi[:d] = 1.0 / np.sqrt(d)
    return psi


def density_first_crossing(u, pf, rho0, t_max):
    """``p(t) = Tr P U rho_{t-1} U^H P`` with ``rho_t = Q U rho_{t-1} U^H Q``."""
    q = np.eye(u.shape[0]) - pf
    rho = rho0.copy()
    out = []
    for _ in range(t_max):
        nxt = u @ rho @ u.conj().T
        out.append(float(np.trace(pf @ nxt @ pf).real))
        rho = q @ nxt @ q
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
