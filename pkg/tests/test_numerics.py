import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import qse
from qse import NumericalFailureError, ValidationError

from helpers import compatible_rhs, random_density, random_hermitian, random_unitary
from oracles import integrate

# integral of log^2(theta)/theta over [0.1, 10];
# golden from oracles.integrate(lambda t: np.log(t)**2 / t, 0.1, 10.0)
I_LOGSQ = 8.138714369190183


class TestMakeLogGrid:
    def test_rejects_empty_interval(self):
        with pytest.raises(ValidationError):
            qse.make_log_grid(1.0, 1.0, 50)

    @pytest.mark.parametrize("bad", [(-1.0, 10.0, 50), (0.0, 1.0, 50), (2.0, 1.0, 50)])
    def test_rejects_bad_bounds(self, bad):
        with pytest.raises(ValidationError):
            qse.make_log_grid(*bad)

    def test_rejects_too_few_nodes(self):
        with pytest.raises(ValidationError):
            qse.make_log_grid(0.1, 10.0, 1)

    def test_log_flat_density_normalizes_exactly(self):
        grid = qse.make_log_grid(0.1, 10.0, 200)
        value = grid.integrate(1.0 / (grid.nodes * np.log(100.0)))
        assert abs(value - 1.0) <= 1e-12

    def test_log_square_integral_matches_dense_reference(self):
        grid = qse.make_log_grid(0.1, 10.0, 200)
        value = grid.integrate(np.log(grid.nodes) ** 2 / grid.nodes)
        assert abs(value - I_LOGSQ) <= 1e-10 * I_LOGSQ

    @pytest.mark.parametrize("degree", [0, 3, 9, 15])
    def test_exact_for_low_degree_log_polynomials(self, degree):
        # n-node Gauss rule integrates degree <= 2n-1 polynomials in log(theta)
        n = 8
        rng = np.random.default_rng(degree)
        coeffs = rng.normal(size=degree + 1)
        grid = qse.make_log_grid(0.2, 5.0, n)
        poly = np.polynomial.Polynomial(coeffs)
        value = grid.integrate(poly(np.log(grid.nodes)) / grid.nodes)
        exact = poly.integ()(np.log(5.0)) - poly.integ()(np.log(0.2))
        assert abs(value - exact) <= 1e-12 * max(1.0, abs(exact))

    def test_nodes_inside_interval_and_increasing(self):
        grid = qse.make_log_grid(0.5, 7.0, 64)
        assert grid.nodes[0] > 0.5 and grid.nodes[-1] < 7.0
        assert np.all(np.diff(grid.nodes) > 0)


class TestGridValidation:
    def test_rejects_nonpositive_nodes(self):
        with pytest.raises(ValidationError):
            qse.Grid(nodes=np.array([-1.0, 2.0]), weights=np.array([1.0, 1.0]))

    def test_rejects_unsorted_nodes(self):
        with pytest.raises(ValidationError):
            qse.Grid(nodes=np.array([2.0, 1.0]), weights=np.array([1.0, 1.0]))

    def test_rejects_negative_weights(self):
        with pytest.raises(ValidationError):
            qse.Grid(nodes=np.array([1.0, 2.0]), weights=np.array([-1.0, 1.0]))


class TestEigHermitian:
    def test_identity(self):
        es = qse.eig_hermitian(np.eye(3, dtype=complex))
        assert_allclose(es.values, [1.0, 1.0, 1.0])

    def test_diagonal_sorted_with_permuted_identity_vectors(self):
        es = qse.eig_hermitian(np.diag([2.0, -1.0]).astype(complex))
        assert_allclose(es.values, [-1.0, 2.0])
        assert_allclose(np.abs(es.vectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)

    def test_reconstruction_residual(self, rng):
        a = random_hermitian(rng, 8)
        es = qse.eig_hermitian(a)
        rebuilt = es.vectors @ np.diag(es.values) @ es.vectors.conj().T
        assert np.linalg.norm(a - rebuilt) <= 1e-10 * np.linalg.norm(a)
        gram = es.vectors.conj().T @ es.vectors
        assert np.abs(gram - np.eye(8)).max() <= 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            qse.eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_unitary_covariance(self, rng):
        a = random_hermitian(rng, 6)
        u = random_unitary(rng, 6)
        va = qse.eig_hermitian(a).values
        vb = qse.eig_hermitian(u @ a @ u.conj().T).values
        assert_allclose(va, vb, atol=1e-10)


class TestSolveLyapunov:
    def test_maximally_mixed_probe_doubles_rhs(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        s = qse.solve_lyapunov(np.eye(2) / 2.0, x)
        assert_allclose(s, 2.0 * x, atol=1e-12)

    def test_diagonal_case(self):
        rho0 = np.diag([0.25, 0.75]).astype(complex)
        rho1 = np.diag([0.3, -0.1]).astype(complex)
        s = qse.solve_lyapunov(rho0, rho1)
        assert_allclose(s, np.diag([0.3 / 0.25, -0.1 / 0.75]), atol=1e-12)

    def test_full_rank_residual(self, rng):
        rho0 = random_density(rng, 6)
        rho1 = random_hermitian(rng, 6)
        s = qse.solve_lyapunov(rho0, rho1)
        assert qse.lyapunov_residual(s, rho0, rho1) <= 1e-10 * max(1.0, np.linalg.norm(rho1))

    def test_rank_deficient_residual_and_kernel_zero(self, rng):
        rho0 = random_density(rng, 6, rank=3)
        rho1 = compatible_rhs(rng, rho0)
        s = qse.solve_lyapunov(rho0, rho1)
        assert qse.lyapunov_residual(s, rho0, rho1) <= 1e-10 * max(1.0, np.linalg.norm(rho1))
        w, v = np.linalg.eigh(rho0)
        kernel = v[:, w <= 1e-12 * w.max()]
        assert np.linalg.norm(s @ kernel) <= 1e-8

    def test_incompatible_rhs_raises(self, rng):
        rho0 = random_density(rng, 4, rank=2)
        rho1 = random_hermitian(rng, 4)  # generically leaks onto the kernel
        with pytest.raises(NumericalFailureError):
            qse.solve_lyapunov(rho0, rho1)

    def test_rejects_non_density_probe(self, rng):
        with pytest.raises(ValidationError):
            qse.solve_lyapunov(2.0 * np.eye(3), random_hermitian(rng, 3))

    def test_linear_in_rhs(self, rng):
        rho0 = random_density(rng, 5)
        r1, r2 = random_hermitian(rng, 5), random_hermitian(rng, 5)
        a, b = 0.7, -2.3
        s_combo = qse.solve_lyapunov(rho0, a * r1 + b * r2)
        s_split = a * qse.solve_lyapunov(rho0, r1) + b * qse.solve_lyapunov(rho0, r2)
        assert np.abs(s_combo - s_split).max() <= 1e-10 * max(1.0, np.abs(s_split).max())

    @settings(max_examples=25, deadline=None)
    @given(dim=st.integers(2, 16), drop=st.integers(0, 3), seed=st.integers(0, 2**32 - 1))
    def test_residual_property(self, dim, drop, seed):
        rng = np.random.default_rng(seed)
        rank = max(1, dim - drop)
        rho0 = random_density(rng, dim, rank=rank)
        rho1 = compatible_rhs(rng, rho0)
        s = qse.solve_lyapunov(rho0, rho1)
        assert qse.lyapunov_residual(s, rho0, rho1) <= 1e-10 * max(1.0, np.linalg.norm(rho1))


class TestIsPsd:
    def test_identity(self):
        assert qse.is_psd(np.eye(4, dtype=complex), 1e-12)

    def test_indefinite(self):
        assert not qse.is_psd(np.diag([1.0, -1.0]).astype(complex), 1e-12)

    def test_sandwich_is_psd(self, rng):
        # (S - s I) rho0 (S - s I) is PSD by construction
        rho0 = random_density(rng, 5)
        s = qse.solve_lyapunov(rho0, compatible_rhs(rng, rho0))
        for s_val in np.linalg.eigvalsh(s)[:2]:
            shifted = s - s_val * np.eye(5)
            assert qse.is_psd(shifted @ rho0 @ shifted, 1e-10)
