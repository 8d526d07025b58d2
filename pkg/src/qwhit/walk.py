"""Coined walk evolution, the measured walk, and its time statistics.

Basis index convention: ``|v, j>`` (vertex ``v``, coin label ``j``) sits at
index ``v * d + j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .coins import UnitaryMatrix
from .errors import ConfigurationError, DomainError
from .graph import LabeledGraph, validate_labeling

__all__ = [
    "WalkState",
    "MeasuredWalk",
    "FirstCrossingSeries",
    "HittingEstimate",
    "shift_operator",
    "evolution_operator",
    "measured_walk",
    "basis_state",
    "symmetric_initial_state",
    "first_crossing_series",
    "hitting_time_estimate",
    "one_shot_hitting_time",
    "concurrent_hitting_time",
    "DEFAULT_EPSILON",
    "DEFAULT_T_MAX",
]

DEFAULT_EPSILON = 1e-3
DEFAULT_T_MAX = 1_000_000
NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WalkState:
    """Complex amplitudes over the position (x) coin basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class MeasuredWalk:
    """A unitary walk with a two-outcome measurement of the final vertex.

    ``final_indices`` are the basis indices spanned by the final-vertex
    projector ``P_f``; ``Q_f = I - P_f``. ``graph`` and ``coin`` are None for
    walks built directly on a reduced basis.
    """

    evolution: UnitaryMatrix
    final_indices: np.ndarray
    final_vertex: int | None = None
    graph: LabeledGraph | None = None
    coin: UnitaryMatrix | None = None
    _mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        idx = np.unique(np.asarray(self.final_indices, dtype=np.int64))
        if idx.size == 0 or idx[0] < 0 or idx[-1] >= self.dim:
            raise ConfigurationError("final indices must be a non-empty subset of the basis")
        idx.setflags(write=False)
        object.__setattr__(self, "final_indices", idx)
        mask = np.zeros(self.dim, dtype=bool)
        mask[idx] = True
        mask.setflags(write=False)
        object.__setattr__(self, "_mask", mask)

    @property
    def dim(self) -> int:
        return self.evolution.dim

    @property
    def final_mask(self) -> np.ndarray:
        return self._mask

    def step(self, psi: np.ndarray) -> np.ndarray:
        return self.evolution.matrix @ psi

    def final_projector(self) -> sp.csr_matrix:
        return sp.diags(self._mask.astype(float), format="csr")

    def continue_projector(self) -> sp.csr_matrix:
        return sp.diags((~self._mask).astype(float), format="csr")


class FirstCrossingSeries(NamedTuple):
    """First-arrival probabilities ``p(1) .. p(T)`` of a measured walk.

    ``stopped_by`` is ``"epsilon"`` when the cumulative absorbed mass exceeded
    ``1 - epsilon`` at the last step, otherwise ``"t_max"``.
    """

    probabilities: np.ndarray
    cumulative: np.ndarray
    t_max: int
    epsilon: float
    stopped_by: str
    survivor_norms: np.ndarray | None = None

    @property
    def absorbed(self) -> float:
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0

    def __len__(self):
        return len(self.probabilities)


class HittingEstimate(NamedTuple):
    tau_est: float
    stopping_time: int
    absorbed: float


def shift_operator(g: LabeledGraph) -> sp.csr_matrix:
    """Permutation ``|v, j> -> |neighbor(v, j), j>``."""
    N, d = g.neighbors.shape
    cols = np.arange(N * d)
    rows = (g.neighbors * d + np.arange(d)[None, :]).reshape(-1)
    return sp.csr_matrix((np.ones(N * d, dtype=complex), (rows, cols)), shape=(N * d, N * d))


def evolution_operator(g: LabeledGraph, c: UnitaryMatrix) -> UnitaryMatrix:
    """Sparse ``U = S (I x C)``: flip the coin, then move along the new label.

    Raises
    ------
    ConfigurationError
        If the coin dimension differs from the graph degree or the graph
        labeling is invalid.
    """
    if c.dim != g.degree:
        raise ConfigurationError(f"coin dimension {c.dim} does not match graph degree {g.degree}")
    bad = validate_labeling(g)
    if bad:
        raise ConfigurationError(f"graph labeling is invalid ({len(bad)} violations, first: {bad[0]})")
    coin = sp.kron(sp.identity(g.n_vertices, format="csr"), sp.csr_matrix(c.toarray()), format="csr")
    u = (shift_operator(g) @ coin).tocsr()
    u.eliminate_zeros()
    return UnitaryMatrix(u, kind="evolution")


def measured_walk(g: LabeledGraph, c: UnitaryMatrix, final_vertex: int | None = None) -> MeasuredWalk:
    """Measured walk on ``g`` absorbing at ``final_vertex`` (default: the last vertex).

    For the hypercube the default is the all-ones vertex ``2**n - 1``.
    """
    if final_vertex is None:
        final_vertex = g.n_vertices - 1
    if not 0 <= final_vertex < g.n_vertices:
        raise DomainError(f"final vertex {final_vertex} not in graph")
    d = g.degree
    idx = np.arange(final_vertex * d, (final_vertex + 1) * d)
    return MeasuredWalk(evolution_operator(g, c), idx, final_vertex=final_vertex, graph=g, coin=c)


def basis_state(dim: int, index: int) -> WalkState:
    a = np.zeros(dim, dtype=complex)
    a[index] = 1.0
    return WalkState(a)


def symmetric_initial_state(g: LabeledGraph, v0: int = 0) -> WalkState:
    """Particle at ``v0`` with the coin in the uniform superposition."""
    if not 0 <= v0 < g.n_vertices:
        raise DomainError(f"start vertex {v0} not in graph")
    d = g.degree
    a = np.zeros(g.n_vertices * d, dtype=complex)
    a[v0 * d : (v0 + 1) * d] = 1.0 / np.sqrt(d)
    return WalkState(a)


def _check_start(w: MeasuredWalk, psi0: WalkState):
    if psi0.dim != w.dim:
        raise ConfigurationError(f"state dimension {psi0.dim} does not match walk dimension {w.dim}")
    if abs(psi0.norm_squared - 1.0) > 1e-9:
        raise DomainError(f"initial state must be normalized, |psi|^2 = {psi0.norm_squared}")
    if np.any(np.abs(psi0.amplitudes[w.final_mask]) > NORM_TOL):
        raise DomainError("initial state has amplitude on the final vertex (start equals final)")


def first_crossing_series(
    w: MeasuredWalk,
    psi0: WalkState,
    t_max: int = DEFAULT_T_MAX,
    epsilon: float = DEFAULT_EPSILON,
    track_norms: bool = False,
) -> FirstCrossingSeries:
    """Iterate the measured walk and record first-arrival probabilities.

    Works on the unnormalized surviving branch ``phi_t = Q_f U phi_{t-1}``:
    ``p(t) = ||P_f U phi_{t-1}||^2``. Stops after ``t_max`` steps or as soon
    as the cumulative probability exceeds ``1 - epsilon``.

    Parameters
    ----------
    w : MeasuredWalk
    psi0 : WalkState
        Normalized start state with no weight on the final vertex.
    t_max : int
    epsilon : float
        In (0, 1).
    track_norms : bool
        Also record ``||phi_t||^2`` for every step (bookkeeping checks).
    """
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    _check_start(w, psi0)

    u = w.evolution.matrix
    mask = w.final_mask
    target = 1.0 - epsilon
    phi = psi0.amplitudes.copy()
    probs = np.empty(min(t_max, 4096))
    norms = [] if track_norms else None
    total = 0.0
    stopped_by = "t_max"
    t = 0
    while t < t_max:
        phi = u @ phi
        hit = phi[mask]
        p = float(np.vdot(hit, hit).real)
        phi[mask] = 0.0
        if t == probs.shape[0]:
            probs = np.resize(probs, min(t_max, 2 * t))
        probs[t] = p
        t += 1
        total += p
        if track_norms:
            norms.append(float(np.vdot(phi, phi).real))
        if total > target:
            stopped_by = "epsilon"
            break
    probs = probs[:t].copy()
    return FirstCrossingSeries(
        probabilities=probs,
        cumulative=np.cumsum(probs),
        t_max=t_max,
        epsilon=epsilon,
        stopped_by=stopped_by,
        survivor_norms=None if norms is None else np.array(norms),
    )


def hitting_time_estimate(s: FirstCrossingSeries) -> HittingEstimate:
    """Truncated mean ``sum t p(t)`` and the epsilon-stopping time.

    The stopping time is the first step whose cumulative probability exceeds
    ``1 - epsilon``; if the series never got there it is reported as
    ``s.t_max`` (sentinel).
    """
    if len(s) == 0:
        raise DomainError("empty first-crossing series")
    t = np.arange(1, len(s) + 1)
    tau = float(np.dot(t, s.probabilities))
    above = np.nonzero(s.cumulative > 1.0 - s.epsilon)[0]
    stopping = int(above[0]) + 1 if above.size else s.t_max
    return HittingEstimate(tau, stopping, s.absorbed)


def one_shot_hitting_time(w: MeasuredWalk, psi0: WalkState, p: float, t_max: int = 10_000) -> int | None:
    """Smallest ``T <= t_max`` with ``||P_f U^T psi0||^2 >= p`` under unmeasured evolution.

    Arrival probability is summed over all coin states at the final vertex.
    Returns None if the threshold is never reached.
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"probability threshold must lie in (0, 1], got {p}")
    _check_start(w, psi0)
    u = w.evolution.matrix
    mask = w.final_mask
    psi = psi0.amplitudes.copy()
    for t in range(1, t_max + 1):
        psi = u @ psi
        hit = psi[mask]
        if float(np.vdot(hit, hit).real) >= p:
            return t
    return None


def concurrent_hitting_time(s: FirstCrossingSeries, p: float) -> int | None:
    """Smallest ``T`` at which the measured walk has stopped with probability > ``p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability threshold must lie in (0, 1), got {p}")
    above = np.nonzero(s.cumulative > p)[0]
    return int(above[0]) + 1 if above.size else None
