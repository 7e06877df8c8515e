from __future__ import annotations

import numpy as np
import pytest

from ctrlscore.errors import HorizonOverflowError, InvalidHorizonError
from ctrlscore.gramian import (
    DynamicsMatrix,
    Provenance,
    aggregate_gramian,
    feasibility,
    gramian_quadrature_oracle,
    matrix_exp,
    node_gramians,
)

from conftest import expm_taylor, random_stable, rel_fro, simpson_gramian_with_B


class TestDynamicsMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            DynamicsMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            DynamicsMatrix(np.array([[0.0, np.inf], [0.0, 0.0]]))

    def test_negative_laplacian_rowsum_check(self):
        A = np.array([[-1.0, 1.0], [2.0, -2.0]])
        DynamicsMatrix(A, provenance=Provenance.NEGATIVE_LAPLACIAN)
        with pytest.raises(ValueError):
            DynamicsMatrix(
                np.array([[-1.0, 0.5], [2.0, -2.0]]),
                provenance=Provenance.NEGATIVE_LAPLACIAN,
            )


class TestMatrixExp:
    def test_zero_matrix(self):
        assert np.array_equal(matrix_exp(np.zeros((2, 2)), 5.0), np.eye(2))

    def test_diagonal(self):
        E = matrix_exp(np.diag([1.0, -1.0]), 1.0)
        assert np.allclose(E, np.diag([np.e, 1.0 / np.e]), rtol=1e-14)

    def test_matches_taylor_oracle(self, rng):
        A = rng.normal(size=(4, 4))
        E = matrix_exp(A, 0.3)
        assert rel_fro(E, expm_taylor(A, 0.3)) < 1e-12

    def test_overflow_is_an_error(self):
        with pytest.raises(HorizonOverflowError):
            matrix_exp(np.array([[1000.0]]), 1000.0)


class TestNodeGramians:
    def test_zero_dynamics_closed_form(self):
        gs = node_gramians(DynamicsMatrix(np.zeros((4, 4))), 7.0)
        for i in range(4):
            expected = np.zeros((4, 4))
            expected[i, i] = 7.0
            assert np.allclose(gs.gramians[i], expected, atol=1e-13)

    def test_scalar_analytic(self):
        # int_0^1 e^{-2t} dt = (1 - e^{-2}) / 2
        gs = node_gramians(DynamicsMatrix(np.array([[-1.0]])), 1.0)
        assert gs.gramians[0, 0, 0] == pytest.approx((1 - np.exp(-2)) / 2, abs=1e-12)

    def test_against_quadrature_oracle(self, rng):
        A = random_stable(5, rng)
        gs = node_gramians(A, 2.0)
        for i in range(5):
            Wq = gramian_quadrature_oracle(A, i, 2.0, 2000)
            assert rel_fro(gs.gramians[i], Wq) < 1e-8

    def test_invalid_horizon(self):
        with pytest.raises(InvalidHorizonError):
            node_gramians(DynamicsMatrix(np.zeros((2, 2))), 0.0)

    @pytest.mark.parametrize("T", [0.1, 1.0, 10.0])
    def test_symmetry_and_psd(self, rng, T):
        A = random_stable(4, rng)
        gs = node_gramians(A, T)
        for W in gs.gramians:
            assert np.linalg.norm(W - W.T) <= 1e-10 * np.linalg.norm(W)
            eigs = np.linalg.eigvalsh(W)
            assert eigs[0] >= -1e-10 * max(eigs[-1], 0.0)

    def test_monotone_in_horizon(self, rng):
        A = random_stable(4, rng)
        gs1 = node_gramians(A, 1.0)
        gs2 = node_gramians(A, 2.5)
        for W1, W2 in zip(gs1.gramians, gs2.gramians):
            assert np.linalg.eigvalsh(W2 - W1)[0] >= -1e-10 * np.linalg.eigvalsh(W2)[-1]

    def test_uniform_aggregate_positive_definite(self, rng):
        # the feasibility witness: W(1/n, T) is PD for any A
        A = random_stable(5, rng)
        gs = node_gramians(A, 1.0)
        W = aggregate_gramian(gs, np.full(5, 0.2))
        assert feasibility(W).feasible

    def test_horizon_derivative_identity(self, rng):
        # (W_i(T+h) - W_i(T))/h -> exp(AT) e_i e_i^T exp(A^T T)
        A = random_stable(3, rng)
        T, h = 1.0, 1e-6
        gs = node_gramians(A, T)
        gs_h = node_gramians(A, T + h)
        E = matrix_exp(A.entries, T)
        for i in range(3):
            fd = (gs_h.gramians[i] - gs.gramians[i]) / h
            exact = np.outer(E[:, i], E[:, i])
            assert rel_fro(fd, exact) < 1e-5


class TestQuadratureOracle:
    def test_constant_integrand_exact(self):
        W = gramian_quadrature_oracle(np.zeros((3, 3)), 1, 1.0, 2)
        expected = np.zeros((3, 3))
        expected[1, 1] = 1.0
        assert np.allclose(W, expected, atol=1e-15)

    def test_scalar_value(self):
        W = gramian_quadrature_oracle(np.array([[-1.0]]), 0, 1.0, 1000)
        assert W[0, 0] == pytest.approx((1 - np.exp(-2)) / 2, abs=1e-10)

    def test_odd_steps_rejected(self):
        with pytest.raises(ValueError):
            gramian_quadrature_oracle(np.zeros((2, 2)), 0, 1.0, 3)

    def test_fourth_order_convergence(self, rng):
        A = random_stable(4, rng)
        ref = node_gramians(A, 1.5).gramians[2]
        e200 = np.linalg.norm(gramian_quadrature_oracle(A, 2, 1.5, 200) - ref)
        e400 = np.linalg.norm(gramian_quadrature_oracle(A, 2, 1.5, 400) - ref)
        ratio = e200 / e400
        assert 10 < ratio < 24  # nominal 16x for an O(h^4) rule


class TestAggregateGramian:
    def test_single_node_allocation(self, rng):
        A = random_stable(3, rng)
        gs = node_gramians(A, 1.0)
        p = np.array([1.0, 0.0, 0.0])
        assert np.allclose(aggregate_gramian(gs, p), gs.gramians[0], atol=1e-14)

    def test_uniform_zero_dynamics(self):
        gs = node_gramians(DynamicsMatrix(np.zeros((4, 4))), 7.0)
        W = aggregate_gramian(gs, np.full(4, 0.25))
        assert np.allclose(W, (7.0 / 4.0) * np.eye(4), atol=1e-13)

    def test_matches_explicit_sqrt_input_quadrature(self, rng):
        A = random_stable(4, rng)
        gs = node_gramians(A, 1.0)
        p = rng.dirichlet(np.ones(4))
        W = aggregate_gramian(gs, p)
        B = np.diag(np.sqrt(p))
        Wq = simpson_gramian_with_B(A.entries, B, 1.0, 2000)
        assert rel_fro(W, Wq) < 1e-8

    def test_dimension_mismatch(self, rng):
        gs = node_gramians(DynamicsMatrix(np.zeros((3, 3))), 1.0)
        with pytest.raises(ValueError):
            aggregate_gramian(gs, np.full(4, 0.25))

    def test_affine_in_allocation(self, rng):
        A = random_stable(4, rng)
        gs = node_gramians(A, 1.0)
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        a = 0.3
        lhs = aggregate_gramian(gs, a * p + (1 - a) * q)
        rhs = a * aggregate_gramian(gs, p) + (1 - a) * aggregate_gramian(gs, q)
        assert np.allclose(lhs, rhs, atol=1e-15, rtol=1e-13)


class TestFeasibility:
    def test_identity(self):
        res = feasibility(np.eye(3))
        assert res.feasible and res.lambda_min == pytest.approx(1.0)

    def test_singular_boundary(self):
        res = feasibility(np.diag([1.0, 0.0]))
        assert not res.feasible
        assert res.lambda_min == pytest.approx(0.0, abs=1e-15)

    def test_never_raises_on_indefinite(self):
        res = feasibility(np.diag([1.0, -1.0]))
        assert not res.feasible
