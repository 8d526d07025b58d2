"""Edge-labeled regular graphs: the hypercube and its distorted variant.

A graph is stored as a neighbor table ``neighbors[v, j]`` giving the vertex
reached from ``v`` along the edge labeled ``j``. Labels are proper: the edge
``{v, w}`` carries the same label at both ends, so the table is an involution
in each column.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SizeError

__all__ = [
    "LabeledGraph",
    "Violation",
    "hypercube",
    "distorted_hypercube",
    "validate_labeling",
    "hamming_weight",
    "odd_cycle_length",
]

MAX_HYPERCUBE_DIM = 30


class Violation(NamedTuple):
    vertex: int
    label: int
    reason: str


@dataclass(frozen=True)
class LabeledGraph:
    """Regular graph of degree ``d`` on vertices ``0 .. N-1`` with edge labels.

    Attributes
    ----------
    neighbors : ndarray of int, shape (N, d)
        ``neighbors[v, j]`` is the vertex joined to ``v`` by the edge labeled ``j``.
    kind : str
        ``"hypercube"``, ``"distorted_hypercube"`` or ``"custom"``.
    n : int or None
        Hypercube dimension for the two hypercube kinds.
    """

    neighbors: np.ndarray
    kind: str = "custom"
    n: int | None = None

    def __post_init__(self):
        table = np.array(self.neighbors, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] == 0 or table.shape[1] == 0:
            raise SizeError(f"neighbor table must be a non-empty 2-D array, got shape {table.shape}")
        table.setflags(write=False)
        object.__setattr__(self, "neighbors", table)

    @property
    def n_vertices(self) -> int:
        return self.neighbors.shape[0]

    @property
    def degree(self) -> int:
        return self.neighbors.shape[1]

    def neighbor(self, v: int, j: int) -> int:
        return int(self.neighbors[v, j])

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (self.kind, self.n) == (other.kind, other.n) and np.array_equal(
            self.neighbors, other.neighbors
        )

    def __hash__(self):
        return hash((self.kind, self.n, self.neighbors.tobytes()))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "degree": self.degree,
            "neighbors": self.neighbors.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "LabeledGraph":
        table = np.asarray(data["neighbors"], dtype=np.int64)
        if table.shape != (data["n_vertices"], data["degree"]):
            raise SizeError(
                f"neighbor table shape {table.shape} does not match "
                f"n_vertices={data['n_vertices']}, degree={data['degree']}"
            )
        return cls(table, kind="custom")

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        return cls.from_dict(json.loads(text))


def hypercube(n: int) -> LabeledGraph:
    """The ``n``-dimensional hypercube; label ``j`` flips bit ``j``."""
    if not 1 <= n <= MAX_HYPERCUBE_DIM:
        raise SizeError(f"hypercube dimension must be in [1, {MAX_HYPERCUBE_DIM}], got {n}")
    v = np.arange(1 << n, dtype=np.int64)[:, None]
    flips = np.int64(1) << np.arange(n, dtype=np.int64)[None, :]
    return LabeledGraph(v ^ flips, kind="hypercube", n=n)


def distorted_hypercube(n: int) -> LabeledGraph:
    """Hypercube with the face ``A=0, B=1, C=2, D=3`` rewired.

    The label-0 edges ``A-B`` and ``C-D`` are replaced by ``A-D`` and ``B-C``,
    keeping label 0 at all four endpoints. The result is still regular and
    properly labeled but no longer bipartite.
    """
    if n < 2:
        raise SizeError(f"distorted hypercube needs n >= 2 (a face must exist), got {n}")
    table = hypercube(n).neighbors.copy()
    a, b, c, d = 0, 1, 2, 3
    table[a, 0], table[d, 0] = d, a
    table[b, 0], table[c, 0] = c, b
    return LabeledGraph(table, kind="distorted_hypercube", n=n)


def validate_labeling(g: LabeledGraph) -> list[Violation]:
    """Return every violation of the labeled-regular-graph invariants.

    Checks that each entry names a valid vertex, that there are no self-loops,
    and that the label matches at both endpoints. An empty list means the
    graph may be used to build a walk.
    """
    out: list[Violation] = []
    table = g.neighbors
    N, d = table.shape
    for v in range(N):
        for j in range(d):
            w = int(table[v, j])
            if not 0 <= w < N:
                out.append(Violation(v, j, f"neighbor {w} out of range"))
                continue
            if w == v:
                out.append(Violation(v, j, "self-loop"))
                continue
            back = int(table[w, j])
            if back != v:
                out.append(Violation(v, j, f"label mismatch: neighbor({w},{j}) = {back}, expected {v}"))
    return out


def hamming_weight(v: int) -> int:
    return bin(v).count("1")


def odd_cycle_length(g: LabeledGraph) -> int | None:
    """Length of an odd closed walk found by BFS 2-coloring, or None.

    Returns None iff the graph is bipartite. Otherwise the graph contains an
    odd cycle no longer than the returned value.
    """
    N = g.n_vertices
    depth = np.full(N, -1, dtype=np.int64)
    best: int | None = None
    for root in range(N):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in g.neighbors[v]:
                w = int(w)
                if depth[w] < 0:
                    depth[w] = depth[v] + 1
                    queue.append(w)
                elif depth[w] == depth[v]:
                    length = 2 * int(depth[v]) + 1
                    best = length if best is None else min(best, length)
    return best
