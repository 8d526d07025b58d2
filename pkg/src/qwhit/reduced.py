"""The 2n-dimensional symmetric subspace of the Grover walk on the hypercube.

Starting from vertex 0 with a uniform coin, the Grover walk never leaves the
span of the states

    |R, x>  uniform over (vertex of weight x, label pointing at a 0-bit)
    |L, x>  uniform over (vertex of weight x, label pointing at a 1-bit)

ordered ``|R,0>, |L,1>, |R,1>, ..., |R,n-1>, |L,n>``. There is no ``|L,0>``
and no ``|R,n>``. The walk is then a walk on a line of ``n + 1`` weights with a
weight-dependent coin, which makes n ~ 100 tractable.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .coins import UnitaryMatrix
from .errors import DomainError, ResourceError, SizeError
from .superop import HittingResult, build_superoperators, closed_form_hitting_time, iterative_hitting_time
from .walk import DEFAULT_EPSILON, DEFAULT_T_MAX, MeasuredWalk, WalkState, basis_state

__all__ = [
    "ReducedBasis",
    "coin_angle",
    "reduced_operators",
    "reduced_walk",
    "reduced_initial_state",
    "reduced_hitting_time",
    "embed_reduced_state",
]

MAX_EMBED_DIM = 16


@dataclass(frozen=True)
class ReducedBasis:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise SizeError(f"reduced walk needs n >= 2, got {self.n}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def index(self, side: str, x: int) -> int:
        if side == "R" and 0 <= x < self.n:
            return 2 * x
        if side == "L" and 1 <= x <= self.n:
            return 2 * x - 1
        raise DomainError(f"no reduced state |{side},{x}> for n={self.n}")

    def label(self, i: int) -> tuple[str, int]:
        if not 0 <= i < self.dim:
            raise DomainError(f"index {i} out of range for n={self.n}")
        return ("R", i // 2) if i % 2 == 0 else ("L", (i + 1) // 2)

    @property
    def labels(self) -> list[tuple[str, int]]:
        return [self.label(i) for i in range(self.dim)]

    @property
    def start_index(self) -> int:
        return self.index("R", 0)

    @property
    def final_index(self) -> int:
        return self.index("L", self.n)


def coin_angle(n: int, x: int) -> tuple[float, float]:
    """``(cos w_x, sin w_x)`` with ``cos w_x = 1 - 2x/n`` and ``sin w_x >= 0``."""
    return 1.0 - 2.0 * x / n, 2.0 * np.sqrt(x * (n - x)) / n


def reduced_operators(n: int) -> tuple[UnitaryMatrix, UnitaryMatrix]:
    """Shift and coin restricted to the symmetric subspace.

    The shift swaps ``|R,x> <-> |L,x+1>``. At weight ``x`` the coin maps
    ``|L,x> -> -cos w_x |L,x> + sin w_x |R,x>`` and
    ``|R,x> -> sin w_x |L,x> + cos w_x |R,x>``.
    """
    basis = ReducedBasis(n)
    D = basis.dim
    rows, cols = [], []
    for x in range(n):
        r, l_next = basis.index("R", x), basis.index("L", x + 1)
        rows += [l_next, r]
        cols += [r, l_next]
    shift = sp.csr_matrix((np.ones(len(rows), dtype=complex), (rows, cols)), shape=(D, D))

    entries = {}
    for x in range(n + 1):
        c, s = coin_angle(n, x)
        if x < n:
            r = basis.index("R", x)
            entries[(r, r)] = c
        if x > 0:
            lft = basis.index("L", x)
            entries[(lft, lft)] = -c
        if 0 < x < n:
            entries[(r, lft)] = s
            entries[(lft, r)] = s
    (ri, ci), vals = zip(*entries.keys()), list(entries.values())
    coin = sp.csr_matrix((np.array(vals, dtype=complex), (ri, ci)), shape=(D, D))
    return UnitaryMatrix(shift, kind="reduced_shift"), UnitaryMatrix(coin, kind="reduced_coin")


def reduced_walk(n: int) -> MeasuredWalk:
    """Measured walk on the reduced basis, absorbing at ``|L,n>``."""
    shift, coin = reduced_operators(n)
    u = (shift.matrix @ coin.matrix).tocsr()
    u.eliminate_zeros()
    basis = ReducedBasis(n)
    return MeasuredWalk(UnitaryMatrix(u, kind="reduced_evolution"), [basis.final_index], final_vertex=None)


def reduced_initial_state(n: int) -> WalkState:
    return basis_state(2 * n, ReducedBasis(n).start_index)


def reduced_hitting_time(
    n: int,
    method: str = "closed",
    epsilon: float = DEFAULT_EPSILON,
    t_max: int = DEFAULT_T_MAX,
    **solver_options,
) -> HittingResult:
    """Hitting time of the Grover hypercube walk from ``|R,0>`` to ``|L,n>``.

    ``method`` is ``"closed"`` (superoperator solve on the 2n-dimensional
    space) or ``"iterative"`` (first-crossing series up to the
    epsilon-stopping time). Extra keyword arguments go to
    :func:`qwhit.superop.closed_form_hitting_time`.
    """
    w = reduced_walk(n)
    psi0 = reduced_initial_state(n)
    if method in ("closed", "closed_form"):
        pair = build_superoperators(w)
        return closed_form_hitting_time(pair, psi0, space="reduced", **solver_options)
    if method == "iterative":
        return iterative_hitting_time(w, psi0, epsilon=epsilon, t_max=t_max, space="reduced")
    raise DomainError(f"unknown method {method!r}; expected 'closed' or 'iterative'")


def embed_reduced_state(n: int, v) -> WalkState:
    """Map a reduced-basis vector into the full ``2**n * n`` dimensional space.

    Each reduced amplitude is spread uniformly over the full basis states it
    stands for, which makes the map an isometry.
    """
    basis = ReducedBasis(n)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != basis.dim:
        raise DomainError(f"reduced vector must have length {basis.dim}, got {v.shape[0]}")
    if n > MAX_EMBED_DIM:
        raise ResourceError(f"embedding needs a 2**{n} * {n} vector; limit is n <= {MAX_EMBED_DIM}")
    verts = np.arange(1 << n)
    weight = np.array([bin(int(u)).count("1") for u in verts])
    bits = (verts[:, None] >> np.arange(n)[None, :]) & 1
    out = np.zeros((1 << n, n), dtype=complex)
    for x in range(n + 1):
        rows = weight == x
        if x < n:
            norm = np.sqrt(comb(n, x) * (n - x))
            out[rows] += np.where(bits[rows] == 0, v[basis.index("R", x)] / norm, 0.0)
        if x > 0:
            norm = np.sqrt(comb(n, x) * x)
            out[rows] += np.where(bits[rows] == 1, v[basis.index("L", x)] / norm, 0.0)
    return WalkState(out.reshape(-1))
