"""Vectorization, superoperator assembly and the closed-form hitting time."""

import numpy as np
import pytest
import scipy.linalg as sla
from conftest import dense_dft, dense_grover, dense_walk, final_projector, symmetric_start
from hypothesis import given, settings
from hypothesis import strategies as st

from qwhit.coins import make_coin
from qwhit.errors import DomainError, ResourceError
from qwhit.graph import distorted_hypercube, hypercube
from qwhit.superop import (
    HittingResult,
    build_superoperators,
    closed_form_hitting_time,
    devectorize,
    iterative_hitting_time,
    solve_stein_triangular,
    superop_row_budget,
    vectorize,
    vectorized_trace,
)
from qwhit.walk import first_crossing_series, measured_walk, symmetric_initial_state


def _setup(n, coin="grover", graph=hypercube):
    g = graph(n)
    w = measured_walk(g, make_coin(coin, g.degree))
    return w, symmetric_initial_state(g), build_superoperators(w)


def _random_density(rng, dim, rank=3):
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _pinv_oracle(n, dense_coin):
    """tau and absorption from a dense pseudoinverse of I - N (row-major Kronecker form)."""
    u = dense_walk(n, dense_coin)
    pf = final_projector(n)
    a, b = (np.eye(u.shape[0]) - pf) @ u, pf @ u
    big_n, big_y = np.kron(a, a.conj()), np.kron(b, b.conj())
    psi = symmetric_start(n)
    rho = np.outer(psi, psi.conj()).reshape(-1)
    pinv = np.linalg.pinv(np.eye(big_n.shape[0]) - big_n, rcond=1e-10)
    trace_rows = np.eye(u.shape[0]).reshape(-1)
    x = pinv @ rho
    return (trace_rows @ big_y @ pinv @ x).real, (trace_rows @ big_y @ x).real


class TestVectorize:
    def test_row_major(self):
        np.testing.assert_array_equal(vectorize(np.array([[1, 2], [3, 4]])), [1, 2, 3, 4])

    def test_identity(self):
        np.testing.assert_array_equal(vectorize(np.eye(3)), [1, 0, 0, 0, 1, 0, 0, 0, 1])

    def test_round_trip(self, rng):
        m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        np.testing.assert_array_equal(devectorize(vectorize(m)), m)

    def test_non_square(self):
        with pytest.raises(DomainError):
            vectorize(np.ones((2, 3)))
        with pytest.raises(DomainError):
            devectorize(np.ones(5))

    def test_trace(self, rng):
        assert vectorized_trace(vectorize(np.eye(3))) == 3
        assert vectorized_trace(vectorize(np.array([[0, 1], [1, 0]]))) == 0
        assert vectorized_trace(vectorize(_random_density(rng, 6))) == pytest.approx(1.0, abs=1e-12)


class TestBuild:
    def test_one_cube_absorbs_immediately(self):
        w, psi, pair = _setup(1)
        assert np.abs(pair.N_matrix @ vectorize(psi.density_matrix())).max() == 0

    def test_two_cube_dense_oracle(self):
        w, psi, pair = _setup(2)
        u = dense_walk(2, dense_grover(2))
        q = np.eye(8) - final_projector(2)
        rho = psi.density_matrix()
        expected = q @ u @ rho @ u.conj().T @ q
        np.testing.assert_allclose(devectorize(pair.N_matrix @ vectorize(rho)), expected, atol=1e-12)
        np.testing.assert_allclose(pair.apply_N(rho), expected, atol=1e-12)

    def test_budget(self, monkeypatch):
        w, _, _ = _setup(2)
        with pytest.raises(ResourceError):
            build_superoperators(measured_walk(hypercube(6), make_coin("grover", 6)))
        monkeypatch.setenv("QWHIT_MAX_SUPEROP_ROWS", "10")
        assert superop_row_budget() == 10
        with pytest.raises(ResourceError):
            build_superoperators(w)

    def test_five_cube_fits_budget(self):
        assert _setup(5)[2].dim == 160


class TestClosedForm:
    def test_single_hop(self):
        w, psi, pair = _setup(1)
        r = closed_form_hitting_time(pair, psi)
        assert r.tau == pytest.approx(1.0) and r.absorption_probability == pytest.approx(1.0)
        assert r.finite and r.value == r.tau

    @pytest.mark.parametrize("n,tau", [(2, 2.0), (3, 4.0), (4, 20 / 3), (5, 89 / 9)])
    def test_grover_values(self, n, tau):
        # frozen from the dense pseudoinverse oracle (n <= 3) and exact rational fits (n = 4, 5)
        w, psi, pair = _setup(n)
        assert closed_form_hitting_time(pair, psi).tau == pytest.approx(tau, rel=1e-9)

    @pytest.mark.parametrize("n,coin", [(2, dense_grover), (3, dense_grover), (2, dense_dft), (3, dense_dft)])
    def test_matches_dense_pseudoinverse(self, n, coin):
        tau, absorbed = _pinv_oracle(n, coin(n))
        w, psi, pair = _setup(n, "grover" if coin is dense_grover else "dft")
        r = closed_form_hitting_time(pair, psi)
        assert r.tau == pytest.approx(tau, rel=1e-8)
        assert r.absorption_probability == pytest.approx(absorbed, abs=1e-9)

    def test_three_cube_vs_series(self):
        w, psi, pair = _setup(3)
        series = iterative_hitting_time(w, psi, epsilon=1e-8)
        assert closed_form_hitting_time(pair, psi).tau == pytest.approx(series.tau, rel=1e-3)

    def test_dft_infinite(self):
        w, psi, pair = _setup(4, "dft")
        r = closed_form_hitting_time(pair, psi)
        assert r.absorption_probability == pytest.approx(4 / 7, abs=1e-9)
        assert not r.finite and r.value == float("inf")
        assert r.tau > 0

    def test_solvers_agree_on_regular_system(self):
        w, psi, pair = _setup(2)
        taus = [closed_form_hitting_time(pair, psi, solver=s).tau for s in ("sparse_lu", "gmres", "schur")]
        np.testing.assert_allclose(taus, 2.0, rtol=1e-9)

    def test_singular_system_falls_back(self):
        # I - N is singular for the 3-cube; the support-restricted solve is used
        w, psi, pair = _setup(3)
        r = closed_form_hitting_time(pair, psi)
        assert r.solver == "schur" and r.deflated_dim > 0

    def test_distorted(self):
        w, psi, pair = _setup(4, graph=distorted_hypercube)
        r = closed_form_hitting_time(pair, psi)
        series = iterative_hitting_time(w, psi, epsilon=1e-10, t_max=100_000)
        assert r.finite and r.tau == pytest.approx(series.tau, rel=1e-6)

    def test_bad_density(self):
        w, psi, pair = _setup(2)
        with pytest.raises(DomainError):
            closed_form_hitting_time(pair, np.eye(8))
        with pytest.raises(DomainError):
            closed_form_hitting_time(pair, np.diag([1.5, -0.5, 0, 0, 0, 0, 0, 0]))
        with pytest.raises(DomainError):
            closed_form_hitting_time(pair, psi, solver="qr")


def test_stein_kernel_matches_lyapunov(rng):
    t = np.triu(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))) * 0.3
    np.fill_diagonal(t, 0.9 * np.exp(1j * rng.uniform(0, 2 * np.pi, 6)))
    r = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    np.testing.assert_allclose(solve_stein_triangular(t, r), sla.solve_discrete_lyapunov(t, r), atol=1e-10)


def test_iterative_result_fields():
    w, psi, _ = _setup(3)
    r = iterative_hitting_time(w, psi, epsilon=1e-3)
    assert r.method == "iterative" and r.finite and r.stopping_time == 19
    assert r.tolerances == {"epsilon": 1e-3, "t_max": 1_000_000}


def test_hitting_result_value():
    assert HittingResult(3.0, 0.5, False, "closed_form").value == float("inf")


@pytest.mark.invariant
class TestSuperopInvariants:
    @pytest.mark.parametrize("n,coin", [(1, "grover"), (2, "dft"), (3, "dft"), (3, "grover"), (4, "hadamard")])
    def test_trace_conservation(self, n, coin, rng):
        w, psi, pair = _setup(n, coin)
        for rho in (psi.density_matrix(), _random_density(rng, pair.dim)):
            v = vectorize(rho)
            total = vectorized_trace(pair.N_matrix @ v) + vectorized_trace(pair.Y_matrix @ v)
            assert total == pytest.approx(np.trace(rho), abs=1e-10)

    @pytest.mark.parametrize("n,coin", [(2, "grover"), (3, "grover"), (3, "dft")])
    def test_spectral_radius(self, n, coin):
        pair = _setup(n, coin)[2]
        assert np.abs(np.linalg.eigvals(pair.N_matrix.toarray())).max() <= 1 + 1e-10

    @pytest.mark.parametrize("n,coin", [(1, "grover"), (2, "grover"), (3, "grover"), (2, "dft"), (3, "dft")])
    def test_geometric_series(self, n, coin):
        w, psi, pair = _setup(n, coin)
        s = first_crossing_series(w, psi, t_max=20, epsilon=1e-15)
        v = vectorize(psi.density_matrix())
        for t in range(1, len(s) + 1):
            assert vectorized_trace(pair.Y_matrix @ v).real == pytest.approx(s.probabilities[t - 1], abs=1e-10)
            v = pair.N_matrix @ v

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_partial_sums_approach_closed_form(self, n):
        w, psi, pair = _setup(n)
        tau = closed_form_hitting_time(pair, psi).tau
        s = first_crossing_series(w, psi, epsilon=1e-12)
        partial = np.cumsum(np.arange(1, len(s) + 1) * s.probabilities)
        assert np.all(np.diff(partial) >= 0)
        assert partial[-1] <= tau * (1 + 1e-9)
        assert partial[-1] == pytest.approx(tau, rel=1e-6)

    def test_kernel_component_does_not_change_absorption(self):
        # add a never-arriving stationary state: it lives in the kernel of I - N
        w, psi, pair = _setup(4, "dft")
        cont = pair.step_continue.toarray()
        lam, vecs = np.linalg.eig(cont)
        k = int(np.argmax(np.abs(lam)))
        assert abs(abs(lam[k]) - 1) < 1e-10
        v = vecs[:, k] / np.linalg.norm(vecs[:, k])
        kernel = np.outer(v, v.conj())
        assert np.abs(pair.N_matrix @ vectorize(kernel) - vectorize(kernel)).max() < 1e-10
        base = closed_form_hitting_time(pair, psi)
        mixed = closed_form_hitting_time(pair, 0.5 * (psi.density_matrix() + kernel))
        assert 2 * mixed.absorption_probability == pytest.approx(base.absorption_probability, abs=1e-9)
        assert 2 * mixed.tau == pytest.approx(base.tau, rel=1e-8)


@pytest.mark.invariant
@settings(max_examples=30, deadline=None)
@given(dim=st.integers(1, 7), seed=st.integers(0, 2**31))
def test_round_trip_property(dim, seed):
    r = np.random.default_rng(seed)
    m = r.normal(size=(dim, dim)) + 1j * r.normal(size=(dim, dim))
    np.testing.assert_array_equal(devectorize(vectorize(m)), m)
    assert vectorized_trace(vectorize(m)) == pytest.approx(np.trace(m))


@pytest.mark.invariant
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 3))
def test_kronecker_form_action(seed, n):
    r = np.random.default_rng(seed)
    w, _, pair = _setup(n, "dft")
    rho = _random_density(r, pair.dim)
    u = w.evolution.toarray()
    pf = w.final_projector().toarray()
    q = np.eye(pair.dim) - pf
    np.testing.assert_allclose(pair.apply_N(rho), q @ u @ rho @ u.conj().T @ q, atol=1e-12)
    np.testing.assert_allclose(pair.apply_Y(rho), pf @ u @ rho @ u.conj().T @ pf, atol=1e-12)
