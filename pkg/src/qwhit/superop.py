"""Closed-form hitting time through vectorized superoperators.

With ``N rho = Q U rho U^H Q`` and ``Y rho = P U rho U^H P`` the hitting time
is ``tau = Tr Y (I - N)^-2 rho0``. Row-major vectorization turns
``A rho B^H`` into ``(A kron conj(B)) vec(rho)``, so ``N`` and ``Y`` become
sparse ``D^2 x D^2`` matrices and ``(I - N)^-2`` is applied by two
consecutive linear solves.

``I - N`` is singular whenever ``U`` has eigenvectors that never touch the
final vertex, and badly conditioned when some only touch it with vanishing
amplitude. Those modes are exactly the eigenvalues of ``Q U`` on (or
numerically on) the unit circle. The solve is then restricted to the
complementary support: an ordered Schur form of ``Q U`` splits off the
unit-modulus block, and the two Stein equations ``X - T X T^H = R`` are
solved on the remaining triangular block. Since ``Y`` annihilates anything
with a component in a never-arriving state, this is the pseudoinverse on the
support, and the mass dropped with those modes shows up as an absorption
deficit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConsistencyError, DomainError, NumericalError, ResourceError
from .walk import (
    DEFAULT_EPSILON,
    DEFAULT_T_MAX,
    MeasuredWalk,
    WalkState,
    first_crossing_series,
    hitting_time_estimate,
)

__all__ = [
    "vectorize",
    "devectorize",
    "vectorized_trace",
    "SuperoperatorPair",
    "HittingResult",
    "build_superoperators",
    "closed_form_hitting_time",
    "iterative_hitting_time",
    "solve_stein_triangular",
    "superop_row_budget",
    "SOLVERS",
]

DEFAULT_MAX_ROWS = 100_000
BUDGET_ENV = "QWHIT_MAX_SUPEROP_ROWS"
SOLVER_TOL = 1e-10
ABSORPTION_TOL = 1e-6
UNIT_CIRCLE_TOL = 1e-10
IMAG_TOL = 1e-8
SOLVERS = ("auto", "sparse_lu", "gmres", "schur")


def superop_row_budget() -> int:
    """Maximum ``D**2`` accepted by :func:`build_superoperators`.

    Read from the ``QWHIT_MAX_SUPEROP_ROWS`` environment variable when set.
    """
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_MAX_ROWS
    try:
        return int(float(raw))
    except ValueError:
        raise ResourceError(f"{BUDGET_ENV}={raw!r} is not a number") from None


# -- vectorization -----------------------------------------------------------


def vectorize(m) -> np.ndarray:
    """Stack the rows of a square matrix into one vector of length ``D**2``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"vectorize expects a square matrix, got shape {m.shape}")
    return m.reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v).reshape(-1)
    dim = int(round(np.sqrt(v.shape[0])))
    if dim * dim != v.shape[0]:
        raise DomainError(f"length {v.shape[0]} is not a perfect square")
    return v.reshape(dim, dim).copy()


def vectorized_trace(x) -> complex:
    """``I^v . x``: the trace of the matrix whose row-stacking is ``x``."""
    x = np.asarray(x).reshape(-1)
    dim = int(round(np.sqrt(x.shape[0])))
    if dim * dim != x.shape[0]:
        raise DomainError(f"length {x.shape[0]} is not a perfect square")
    return complex(x[:: dim + 1].sum())


# -- superoperators ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SuperoperatorPair:
    """Vectorized ``N`` and ``Y`` plus the one-step operators they come from.

    Attributes
    ----------
    N_matrix, Y_matrix : scipy.sparse.csr_matrix, shape (D**2, D**2)
        ``(QU) kron conj(QU)`` and ``(PU) kron conj(PU)``.
    step_continue, step_absorb : scipy.sparse.csr_matrix, shape (D, D)
        ``Q_f U`` and ``P_f U``.
    """

    N_matrix: sp.csr_matrix
    Y_matrix: sp.csr_matrix
    step_continue: sp.csr_matrix
    step_absorb: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.step_continue.shape[0]

    def apply_N(self, rho: np.ndarray) -> np.ndarray:
        return devectorize(self.N_matrix @ vectorize(rho))

    def apply_Y(self, rho: np.ndarray) -> np.ndarray:
        return devectorize(self.Y_matrix @ vectorize(rho))


def build_superoperators(w: MeasuredWalk, max_rows: int | None = None) -> SuperoperatorPair:
    """Assemble the sparse Kronecker forms of ``N`` and ``Y`` for a measured walk.

    Raises
    ------
    ResourceError
        If ``D**2`` exceeds ``max_rows`` (default: :func:`superop_row_budget`).
    """
    limit = superop_row_budget() if max_rows is None else max_rows
    D = w.dim
    if D * D > limit:
        raise ResourceError(
            f"superoperator would have {D * D} rows, above the budget of {limit} "
            f"(set {BUDGET_ENV} or use the iterative/reduced methods)"
        )
    u = sp.csr_matrix(w.evolution.matrix, dtype=complex)
    cont = (w.continue_projector() @ u).tocsr()
    absorb = (w.final_projector() @ u).tocsr()
    cont.eliminate_zeros()
    absorb.eliminate_zeros()
    n_mat = sp.kron(cont, cont.conj(), format="csr")
    y_mat = sp.kron(absorb, absorb.conj(), format="csr")
    return SuperoperatorPair(n_mat, y_mat, cont, absorb)


# -- results -----------------------------------------------------------------


@dataclass(frozen=True)
class HittingResult:
    """Hitting time together with how it was obtained.

    ``tau`` is always the sum over the arriving part of the walk. When the
    absorbed probability falls short of one (``finite`` is False) the true
    hitting time is infinite; :attr:`value` reports that.
    """

    tau: float
    absorption_probability: float
    finite: bool
    method: str
    space: str = "full"
    tolerances: dict = field(default_factory=dict)
    solver: str = ""
    deflated_dim: int = 0
    residual: float = 0.0
    stopping_time: int | None = None

    @property
    def value(self) -> float:
        return self.tau if self.finite else float("inf")


# -- linear algebra ----------------------------------------------------------


def solve_stein_triangular(t: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Solve ``X - T X T^H = R`` for upper-triangular ``T`` with spectral radius < 1.

    Column ``j`` satisfies ``(I - conj(T_jj) T) X_j = R_j + T sum_{k>j} X_k conj(T_jk)``,
    so the columns are obtained from last to first by triangular solves.
    """
    r_dim = t.shape[0]
    x = np.zeros((r_dim, r_dim), dtype=complex)
    eye = np.eye(r_dim)
    for j in range(r_dim - 1, -1, -1):
        rhs = r[:, j] + t @ (x[:, j + 1 :] @ t[j, j + 1 :].conj())
        x[:, j] = sla.solve_triangular(eye - np.conj(t[j, j]) * t, rhs, check_finite=False)
    return x


def _stein_residual(t, x, r) -> float:
    # normwise backward error; near-unit |T_jj| makes ||X|| >> ||R|| legitimately
    scale = np.linalg.norm(r) + (1.0 + np.linalg.norm(t, 2) ** 2) * np.linalg.norm(x)
    scale = max(scale, np.finfo(float).tiny)
    return float(np.linalg.norm(x - t @ x @ t.conj().T - r) / scale)


def _validate_density(rho, dim: int) -> np.ndarray:
    if isinstance(rho, WalkState):
        rho = rho.density_matrix()
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise DomainError(f"density matrix must have shape {(dim, dim)}, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise DomainError(f"density matrix trace is {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise DomainError("density matrix is not positive semidefinite")
    return rho


def _slow_mode_count(cont_dense: np.ndarray, unit_circle_tol: float) -> int:
    ev = np.linalg.eigvals(cont_dense)
    return int(np.count_nonzero(np.abs(ev) > 1.0 - unit_circle_tol))


def _solve_kronecker(sp_pair: SuperoperatorPair, b: np.ndarray, solver: str, tol: float):
    """Two solves with ``I - N``. Returns ``(x, y, residual)`` or None on failure."""
    D2 = b.shape[0]
    m = (sp.identity(D2, format="csc", dtype=complex) - sp_pair.N_matrix).tocsc()
    if solver == "gmres":
        x, info_x = spla.gmres(m, b, rtol=tol, atol=0.0, restart=200, maxiter=50)
        if info_x != 0:
            return None
        y, info_y = spla.gmres(m, x, rtol=tol, atol=0.0, restart=200, maxiter=50)
        if info_y != 0:
            return None
    else:
        try:
            lu = spla.splu(m)
        except RuntimeError:
            return None
        x = lu.solve(b)
        y = lu.solve(x)
    res = max(
        np.linalg.norm(m @ x - b) / max(np.linalg.norm(b), 1e-300),
        np.linalg.norm(m @ y - x) / max(np.linalg.norm(x), 1e-300),
    )
    if not np.isfinite(res) or res > tol:
        return None
    return x, y, float(res)


def _solve_deflated(sp_pair: SuperoperatorPair, rho: np.ndarray, unit_circle_tol: float):
    cont = sp_pair.step_continue.toarray()
    absorb = sp_pair.step_absorb.toarray()
    t, z, k = sla.schur(cont, output="complex", sort=lambda lam: abs(lam) > 1.0 - unit_circle_tol)
    t2 = t[k:, k:]
    z2 = z[:, k:]
    r = z2.conj().T @ rho @ z2
    x = solve_stein_triangular(t2, r)
    y = solve_stein_triangular(t2, x)
    res = max(_stein_residual(t2, x, r), _stein_residual(t2, y, x))
    bz = absorb @ z2
    absorbed = np.trace(bz @ x @ bz.conj().T)
    tau = np.trace(bz @ y @ bz.conj().T)
    return complex(absorbed), complex(tau), int(k), float(res)


def closed_form_hitting_time(
    sp_pair: SuperoperatorPair,
    rho0,
    tol: float = SOLVER_TOL,
    tol_abs: float = ABSORPTION_TOL,
    solver: str = "auto",
    unit_circle_tol: float = UNIT_CIRCLE_TOL,
    space: str = "full",
) -> HittingResult:
    """Evaluate ``tau = Tr Y (I - N)^-2 rho0``.

    Parameters
    ----------
    sp_pair : SuperoperatorPair
    rho0 : ndarray or WalkState
        Initial density matrix (a pure WalkState is converted).
    tol : float
        Relative residual required of each linear solve.
    tol_abs : float
        The result is flagged infinite when the absorbed probability
        ``Tr Y (I - N)^-1 rho0`` is below ``1 - tol_abs``.
    solver : {"auto", "sparse_lu", "gmres", "schur"}
        ``"auto"`` uses a sparse LU of ``I - N`` unless ``Q U`` has
        eigenvalues within ``unit_circle_tol`` of the unit circle, in which
        case the solve is restricted to the support (``"schur"``). A failed
        Kronecker solve also falls back to ``"schur"``.
    unit_circle_tol : float
        Modes of ``Q U`` with ``|lambda| > 1 - unit_circle_tol`` are treated
        as never arriving.

    Raises
    ------
    NumericalError
        If no solver reaches the residual tolerance.
    ConsistencyError
        If the hitting time has an imaginary part above 1e-8.
    """
    if solver not in SOLVERS:
        raise DomainError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    D = sp_pair.dim
    rho = _validate_density(rho0, D)
    b = vectorize(rho)

    chosen = solver
    if solver == "auto":
        chosen = "sparse_lu" if _slow_mode_count(sp_pair.step_continue.toarray(), unit_circle_tol) == 0 else "schur"

    deflated = 0
    result = None
    if chosen in ("sparse_lu", "gmres"):
        result = _solve_kronecker(sp_pair, b, chosen, tol)
        if result is not None:
            x, y, residual = result
            absorbed = vectorized_trace(sp_pair.Y_matrix @ x)
            tau = vectorized_trace(sp_pair.Y_matrix @ y)
        else:
            chosen = "schur"
    if chosen == "schur":
        absorbed, tau, deflated, residual = _solve_deflated(sp_pair, rho, unit_circle_tol)
        if not np.isfinite(residual) or residual > tol:
            raise NumericalError(f"Stein solve residual {residual:.3e} exceeds tolerance {tol:.1e}")

    if abs(tau.imag) > IMAG_TOL * max(1.0, abs(tau.real)):
        raise ConsistencyError(f"hitting time has imaginary part {tau.imag:.3e}")
    absorption = float(absorbed.real)
    return HittingResult(
        tau=float(tau.real),
        absorption_probability=absorption,
        finite=absorption >= 1.0 - tol_abs,
        method="closed_form",
        space=space,
        tolerances={"solver_tol": tol, "tol_abs": tol_abs, "unit_circle_tol": unit_circle_tol},
        solver=chosen,
        deflated_dim=deflated,
        residual=residual,
    )


def iterative_hitting_time(
    w: MeasuredWalk,
    psi0: WalkState,
    epsilon: float = DEFAULT_EPSILON,
    t_max: int = DEFAULT_T_MAX,
    space: str = "full",
) -> HittingResult:
    """Hitting time estimated by summing the first-crossing series up to the epsilon-stopping time.

    ``finite`` is True when the cumulative probability passed ``1 - epsilon``
    within ``t_max`` steps.
    """
    s = first_crossing_series(w, psi0, t_max=t_max, epsilon=epsilon)
    est = hitting_time_estimate(s)
    return HittingResult(
        tau=est.tau_est,
        absorption_probability=est.absorbed,
        finite=s.stopped_by == "epsilon",
        method="iterative",
        space=space,
        tolerances={"epsilon": epsilon, "t_max": t_max},
        solver="series",
        stopping_time=est.stopping_time,
    )
