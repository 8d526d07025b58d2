"""Classical random-walk hitting times: exact formulas, linear solve, Monte Carlo."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import breadth_first_order

from .errors import DomainError, PrecisionError, ReachabilityError, SizeError
from .graph import LabeledGraph

__all__ = [
    "ClassicalHittingProfile",
    "MonteCarloResult",
    "classical_hitting_recursion",
    "classical_hitting_closed",
    "classical_hitting_graph",
    "classical_monte_carlo",
]

MAX_N = 64
MC_STEP_CAP = 100_000_000
MC_CHUNK = 10_000


@dataclass(frozen=True)
class ClassicalHittingProfile:
    """Expected steps to reach weight ``n`` from each weight ``0 .. n``."""

    n: int
    tau_by_weight: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = None

    @property
    def tau0(self) -> float:
        return self.tau_by_weight[0]


def _check_n(n: int):
    if not 1 <= n <= MAX_N:
        raise SizeError(f"hypercube dimension must be in [1, {MAX_N}], got {n}")


def classical_hitting_recursion(n: int, exact: bool = True) -> ClassicalHittingProfile:
    """Solve ``tau(x) = (n-x)/n tau(x+1) + x/n tau(x-1) + 1`` with ``tau(n) = 0``.

    Uses the differences ``Delta(x) = tau(x) - tau(x+1)``, which obey
    ``(n - x) Delta(x) = x Delta(x-1) + n``; every term is positive so the
    forward sweep has no cancellation. ``exact=True`` runs in rational
    arithmetic, ``exact=False`` in float64.
    """
    _check_n(n)
    one = Fraction(1) if exact else 1.0
    deltas = []
    prev = 0 * one
    for x in range(n):
        prev = (x * prev + n * one) / (n - x)
        deltas.append(prev)
    taus = [0 * one] * (n + 1)
    for x in range(n - 1, -1, -1):
        taus[x] = taus[x + 1] + deltas[x]
    floats = tuple(float(t) for t in taus)
    if not all(np.isfinite(floats)):
        raise PrecisionError(f"float overflow at n={n}; use exact=True")
    return ClassicalHittingProfile(n, floats, tuple(taus) if exact else None)


def classical_hitting_closed(n: int) -> float:
    """``tau(0) = sum_x (sum_{j<x} C(n, x-j) + 1) / C(n-1, x)``, evaluated exactly."""
    _check_n(n)
    total = Fraction(0)
    for x in range(n):
        num = sum(comb(n, x - j) for j in range(x)) + 1
        total += Fraction(num, comb(n - 1, x))
    return float(total)


def _transition_matrix(g: LabeledGraph) -> sp.csr_matrix:
    N, d = g.neighbors.shape
    rows = np.repeat(np.arange(N), d)
    return sp.csr_matrix((np.full(N * d, 1.0 / d), (rows, g.neighbors.reshape(-1))), shape=(N, N))


def classical_hitting_graph(g: LabeledGraph, v0: int, vf: int) -> float:
    """Expected first-passage time of the uniform random walk from ``v0`` to ``vf``.

    Solves ``h(v) = 1 + (1/d) sum_j h(neighbor(v, j))`` with ``h(vf) = 0``.
    """
    N = g.n_vertices
    if not (0 <= v0 < N and 0 <= vf < N):
        raise DomainError("start/final vertex not in graph")
    if v0 == vf:
        return 0.0
    p = _transition_matrix(g)
    reach = breadth_first_order(p.T, vf, directed=True, return_predecessors=False)
    if v0 not in set(reach.tolist()):
        raise ReachabilityError(f"vertex {vf} is not reachable from {v0}")
    keep = np.setdiff1d(np.arange(N), [vf])
    # labeled graphs are undirected, so the walk never leaves vf's component
    keep = np.intersect1d(keep, reach)
    pos = {int(v): i for i, v in enumerate(keep)}
    m = sp.identity(len(keep), format="csc") - p[keep][:, keep]
    h = spla.spsolve(m.tocsc(), np.ones(len(keep)))
    return float(np.atleast_1d(h)[pos[v0]])


class MonteCarloResult(NamedTuple):
    mean: float
    std_error: float
    trials: int
    censored: int


def _run_chunk(table: np.ndarray, v0: int, vf: int, trials: int, rng: np.random.Generator, step_cap: int):
    d = table.shape[1]
    pos = np.full(trials, v0, dtype=np.int64)
    times = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    t = 0
    while active.size and t < step_cap:
        t += 1
        labels = rng.integers(0, d, size=active.size)
        nxt = table[pos[active], labels]
        pos[active] = nxt
        done = nxt == vf
        times[active[done]] = t
        active = active[~done]
    return times, active.size


def classical_monte_carlo(
    g: LabeledGraph,
    v0: int,
    vf: int,
    trials: int,
    seed: int = 0,
    step_cap: int = MC_STEP_CAP,
) -> MonteCarloResult:
    """Empirical mean first-passage time of the uniform random walk.

    Trials run in fixed-size chunks, each drawing from its own child stream
    of ``numpy.random.SeedSequence(seed)``, so the result depends only on
    ``seed`` and ``trials`` and not on how chunks are scheduled. Walks still
    running after ``step_cap`` steps are censored and left out of the mean.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    N = g.n_vertices
    if not (0 <= v0 < N and 0 <= vf < N):
        raise DomainError("start/final vertex not in graph")
    if v0 == vf:
        return MonteCarloResult(0.0, 0.0, trials, 0)
    sizes = [MC_CHUNK] * (trials // MC_CHUNK)
    if trials % MC_CHUNK:
        sizes.append(trials % MC_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    table = np.asarray(g.neighbors)
    all_times = []
    censored = 0
    for size, ss in zip(sizes, streams):
        times, cens = _run_chunk(table, v0, vf, size, np.random.default_rng(ss), step_cap)
        all_times.append(times[times > 0])
        censored += cens
    times = np.concatenate(all_times).astype(float)
    if times.size == 0:
        return MonteCarloResult(float("nan"), float("nan"), trials, censored)
    se = float(times.std(ddof=1) / np.sqrt(times.size)) if times.size > 1 else 0.0
    return MonteCarloResult(float(times.mean()), se, trials, censored)
