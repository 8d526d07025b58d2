"""Certificates of infinite hitting time from the eigenstructure of ``U``.

An eigenvector of ``U`` with no amplitude on the final vertex never gets
detected. Within a degenerate eigenspace of dimension ``m`` such vectors form
the null space of the ``d x m`` overlap matrix with the final-vertex states.
The projector onto all of them commutes with ``U`` and annihilates ``P_f``,
and ``<psi|P|psi>`` is the probability that the measured walk never arrives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .coins import UnitaryMatrix
from .errors import ResourceError
from .walk import WalkState

__all__ = [
    "EigenCluster",
    "EigenstructureReport",
    "AvoidingProjector",
    "eigendecompose",
    "cluster_angles",
    "avoiding_projector",
    "infinite_hitting_probability",
    "MAX_DENSE_DIM",
]

MAX_DENSE_DIM = 4096
CLUSTER_TOL = 1e-8
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenCluster:
    eigenvalue: complex
    multiplicity: int
    basis: np.ndarray  # (D, multiplicity), orthonormal columns

    @property
    def angle(self) -> float:
        return float(np.angle(self.eigenvalue))


@dataclass(frozen=True, eq=False)
class EigenstructureReport:
    """Eigenvalues of a unitary grouped into degenerate clusters.

    ``ambiguous`` is set when two neighbouring clusters are closer than ten
    times ``tol_cluster``, i.e. the grouping depends on the tolerance.
    ``normality_defect`` is the largest off-diagonal entry of the Schur form.
    """

    clusters: list[EigenCluster]
    tol_cluster: float
    dim: int
    ambiguous: bool
    normality_defect: float

    def find(self, eigenvalue: complex, tol: float = 1e-6) -> EigenCluster | None:
        for c in self.clusters:
            if abs(c.eigenvalue - eigenvalue) < tol:
                return c
        return None

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c in self.clusters:
            out += c.eigenvalue * (c.basis @ c.basis.conj().T)
        return out


def cluster_angles(angles: np.ndarray, tol: float) -> tuple[list[np.ndarray], float]:
    """Group points on the circle whose angular gaps are below ``tol``.

    Returns the index groups and the smallest gap between distinct groups
    (``inf`` for a single group). Groups may wrap across ``+-pi``.
    """
    order = np.argsort(angles)
    a = angles[order]
    n = a.size
    if n == 0:
        return [], float("inf")
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    breaks = np.nonzero(gaps >= tol)[0]
    if breaks.size == 0:
        return [order], float("inf")
    # start just after a break so that no group straddles the array boundary
    start = (breaks[-1] + 1) % n
    rolled = np.roll(np.arange(n), -start)
    groups, current = [], [rolled[0]]
    for prev, i in zip(rolled[:-1], rolled[1:]):
        if gaps[prev] >= tol:
            groups.append(order[np.array(current)])
            current = []
        current.append(i)
    groups.append(order[np.array(current)])
    min_gap = float(gaps[breaks].min()) if len(groups) > 1 else float("inf")
    return groups, min_gap


def eigendecompose(
    u: UnitaryMatrix | np.ndarray, tol_cluster: float = CLUSTER_TOL, max_dim: int = MAX_DENSE_DIM
) -> EigenstructureReport:
    """Diagonalize a unitary and cluster its eigenvalues by angle.

    The complex Schur form of a normal matrix is diagonal, so the Schur
    vectors are an orthonormal eigenbasis even inside degenerate eigenspaces.
    """
    m = u.toarray() if isinstance(u, UnitaryMatrix) else np.asarray(u, dtype=complex)
    D = m.shape[0]
    if D > max_dim:
        raise ResourceError(f"dense diagonalization of a {D}x{D} matrix exceeds the cap of {max_dim}")
    t, z = sla.schur(m, output="complex")
    ev = np.diag(t).copy()
    normality = float(np.abs(np.triu(t, 1)).max()) if D > 1 else 0.0
    groups, min_gap = cluster_angles(np.angle(ev), tol_cluster)
    clusters = []
    for idx in groups:
        mean = ev[idx].mean()
        clusters.append(EigenCluster(mean / abs(mean), len(idx), z[:, idx]))
    clusters.sort(key=lambda c: (c.angle, c.multiplicity))
    return EigenstructureReport(clusters, tol_cluster, D, min_gap < 10 * tol_cluster, normality)


@dataclass(frozen=True, eq=False)
class AvoidingProjector:
    """Projector onto eigenvectors of ``U`` with zero final-vertex amplitude.

    ``per_cluster`` lists ``(eigenvalue, multiplicity, null_dim, min_overlap)``
    where ``min_overlap`` is the smallest singular value of the cluster's
    overlap matrix (how weakly the least-coupled direction sees the final
    vertex). ``rank_stable`` is False if loosening the threshold tenfold
    changes the rank.
    """

    matrix: np.ndarray
    rank: int
    per_cluster: list[tuple[complex, int, int, float]]
    rank_stable: bool


def _null_dim(s: np.ndarray, m: int, threshold: float) -> int:
    return m - int(np.count_nonzero(s > threshold))


def avoiding_projector(
    report: EigenstructureReport,
    x_f: int,
    d: int,
    tol_rank: float = RANK_TOL,
    final_indices=None,
) -> AvoidingProjector:
    """Build the never-arriving projector from an eigenstructure report.

    For each cluster with basis ``V`` (D x m) the overlap matrix is
    ``M = V[final rows]``; its right null space gives the avoiding
    combinations. Singular values below ``tol_rank`` count as zero (basis
    vectors have unit norm, so this threshold is relative to 1).
    ``final_indices`` overrides the default rows ``x_f*d .. x_f*d + d - 1``.
    """
    rows = np.arange(x_f * d, (x_f + 1) * d) if final_indices is None else np.asarray(final_indices)
    D = report.dim
    proj = np.zeros((D, D), dtype=complex)
    rank = 0
    stable = True
    per_cluster = []
    for c in report.clusters:
        m = c.multiplicity
        overlap = c.basis[rows, :]
        _, s, vh = np.linalg.svd(overlap, full_matrices=True)
        s_full = np.concatenate([s, np.zeros(max(0, m - s.size))])
        k = _null_dim(s_full, m, tol_rank)
        if k != _null_dim(s_full, m, 10 * tol_rank):
            stable = False
        if k:
            null = c.basis @ vh[m - k :].conj().T
            proj += null @ null.conj().T
            rank += k
        per_cluster.append((c.eigenvalue, m, k, float(s_full.min())))
    return AvoidingProjector(proj, rank, per_cluster, stable)


def infinite_hitting_probability(p: AvoidingProjector, psi0: WalkState | np.ndarray) -> float:
    """``<psi0|P|psi0>``: probability that the measured walk never arrives."""
    a = psi0.amplitudes if isinstance(psi0, WalkState) else np.asarray(psi0, dtype=complex)
    val = float(np.vdot(a, p.matrix @ a).real)
    return min(max(val, 0.0), 1.0)
