"""Coin unitaries: Grover, discrete Fourier transform and Hadamard."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import UnsupportedDimensionError

__all__ = [
    "UnitaryMatrix",
    "unitarity_defect",
    "grover_coin",
    "dft_coin",
    "hadamard_coin",
    "make_coin",
    "COIN_KINDS",
]

UNITARITY_TOL = 1e-12
COIN_KINDS = ("grover", "dft", "hadamard")


def unitarity_defect(m) -> float:
    """Max-norm of ``M^H M - I`` for a dense or sparse square matrix."""
    if sp.issparse(m):
        gram = (m.conj().T @ m - sp.identity(m.shape[0], format="csr")).tocoo()
        return float(np.abs(gram.data).max()) if gram.nnz else 0.0
    m = np.asarray(m)
    return float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """A square unitary matrix with its unitarity defect cached at construction.

    ``matrix`` may be a dense ndarray or a scipy sparse matrix. ``kind`` is a
    free-form tag ("grover", "dft", "hadamard", "evolution", ...).
    """

    matrix: object
    kind: str = "custom"
    unitarity_defect: float = field(default=float("nan"))

    def __post_init__(self):
        m = self.matrix
        if not sp.issparse(m):
            m = np.asarray(m, dtype=complex)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"unitary must be square, got shape {m.shape}")
        if np.isnan(self.unitarity_defect):
            object.__setattr__(self, "unitarity_defect", unitarity_defect(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.array(self.matrix)

    def __matmul__(self, other):
        return self.matrix @ other


def grover_coin(d: int) -> UnitaryMatrix:
    """``2|s><s| - I`` with ``|s>`` the uniform superposition of ``d`` labels."""
    if d < 1:
        raise UnsupportedDimensionError(f"coin dimension must be >= 1, got {d}")
    m = np.full((d, d), 2.0 / d) - np.eye(d)
    return UnitaryMatrix(m, kind="grover")


def dft_coin(d: int) -> UnitaryMatrix:
    """Entry ``(r, c)`` is ``exp(2 pi i r c / d) / sqrt(d)``."""
    if d < 1:
        raise UnsupportedDimensionError(f"coin dimension must be >= 1, got {d}")
    r = np.arange(d)
    # reduce the exponent mod d first so large products keep full precision
    phase = np.outer(r, r) % d
    m = np.exp(2j * np.pi * phase / d) / np.sqrt(d)
    return UnitaryMatrix(m, kind="dft")


_H2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def hadamard_coin(d: int) -> UnitaryMatrix:
    """Kronecker power of the 2x2 Hadamard; ``d`` must be a power of two >= 2."""
    if d < 2 or d & (d - 1):
        raise UnsupportedDimensionError(f"Hadamard coin needs d = 2**k with k >= 1, got {d}")
    m = _H2
    while m.shape[0] < d:
        m = np.kron(m, _H2)
    return UnitaryMatrix(m, kind="hadamard")


def make_coin(kind: str, d: int) -> UnitaryMatrix:
    try:
        factory = {"grover": grover_coin, "dft": dft_coin, "hadamard": hadamard_coin}[kind.lower()]
    except KeyError:
        raise UnsupportedDimensionError(f"unknown coin kind {kind!r}; expected one of {COIN_KINDS}") from None
    return factory(d)
