from __future__ import annotations

import numpy as np
import pytest

from ctrlscore.genericity import assumption1_check, gram_matrix, small_T_limit_check
from ctrlscore.gramian import DynamicsMatrix, node_gramians

from conftest import random_stable


class TestGramMatrix:
    def test_zero_dynamics_closed_form(self):
        # W_i - W_n = T (E_ii - E_nn), so G = T^2 (I + 11^T) on indices 1..n-1
        n, T = 5, 3.0
        gs = node_gramians(DynamicsMatrix(np.zeros((n, n))), T)
        G = gram_matrix(gs)
        expected = T**2 * (np.eye(n - 1) + np.ones((n - 1, n - 1)))
        assert np.allclose(G, expected, atol=1e-10)

    def test_two_node_case(self):
        gs = node_gramians(DynamicsMatrix(np.zeros((2, 2))), 1.0)
        G = gram_matrix(gs)
        assert G.shape == (1, 1)
        assert G[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_quadratic_form_identity(self, rng):
        # c^T G c = || sum c_i (W_i - W_n) ||_F^2
        n = 5
        A = random_stable(n, rng)
        gs = node_gramians(A, 1.0)
        G = gram_matrix(gs)
        for _ in range(10):
            c = rng.normal(size=n - 1)
            DW = np.einsum("i,ijk->jk", c, gs.gramians[:-1] - gs.gramians[-1])
            assert c @ G @ c == pytest.approx(
                np.linalg.norm(DW) ** 2, rel=1e-12, abs=1e-12
            )

    def test_requires_two_nodes(self):
        gs = node_gramians(DynamicsMatrix(np.zeros((1, 1))), 1.0)
        with pytest.raises(ValueError):
            gram_matrix(gs)

    def test_psd(self, rng):
        A = random_stable(6, rng)
        G = gram_matrix(node_gramians(A, 2.0))
        eigs = np.linalg.eigvalsh(G)
        assert eigs[0] >= -1e-12 * max(eigs[-1], 1.0)


class TestAssumption1Check:
    def test_zero_dynamics_determinant(self):
        # det G = T^{2(n-1)} * n since eig(I + 11^T) = {1, ..., 1, n}
        n, T = 4, 2.0
        gs = node_gramians(DynamicsMatrix(np.zeros((n, n))), T)
        rep = assumption1_check(gs)
        assert rep.assumption1_holds
        assert rep.det_G == pytest.approx(T ** (2 * (n - 1)) * n, rel=1e-9)

    def test_duplicate_columns_do_not_break_it(self):
        # identical node columns still give distinct rank-one generators
        n = 4
        gs = node_gramians(DynamicsMatrix(np.zeros((n, n))), 1.0)
        rep = assumption1_check(gs)
        assert rep.assumption1_holds

    def test_generic_random_instances(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 6))
            A = random_stable(n, rng)
            T = float(rng.uniform(0.01, 10.0))
            rep = assumption1_check(node_gramians(A, T))
            assert rep.assumption1_holds


class TestSmallTLimit:
    def test_zero_dynamics_exact(self):
        A = DynamicsMatrix(np.zeros((4, 4)))
        assert small_T_limit_check(A, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_deviation_shrinks_linearly(self, rng):
        A = random_stable(5, rng)
        d3 = small_T_limit_check(A, 1e-3)
        d4 = small_T_limit_check(A, 1e-4)
        assert d3 < 1e-2
        assert 5 < d3 / d4 < 20  # O(T) remainder: nominal 10x

    def test_permutation_equivariance(self, rng):
        # jointly relabeling nodes 1..n-1 leaves the deviation unchanged
        n = 5
        A = random_stable(n, rng)
        perm = np.concatenate([rng.permutation(n - 1), [n - 1]])
        P = np.eye(n)[perm]
        A_perm = DynamicsMatrix(P @ A.entries @ P.T)
        d1 = small_T_limit_check(A, 1e-3)
        d2 = small_T_limit_check(A_perm, 1e-3)
        assert d1 == pytest.approx(d2, rel=1e-8)
