"""Shared fixtures and independent oracles for the test suite.

The oracles here (Taylor series, Simpson quadrature with the explicit
square-root input matrix, finite differences) deliberately avoid the code
paths they validate.
"""

from __future__ import annotations

import numpy as np
import pytest

from ctrlscore.gramian import DynamicsMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)


def random_stable(n: int, rng, norm_cap: float = 2.0) -> DynamicsMatrix:
    """Random Hurwitz matrix with spectral norm at most norm_cap."""
    A = rng.normal(size=(n, n))
    A = A / max(np.linalg.norm(A, 2), 1.0)
    shift = max(np.linalg.eigvals(A).real.max(), 0.0) + 0.2
    A = A - shift * np.eye(n)
    s = np.linalg.norm(A, 2)
    if s > norm_cap:
        A = A * (norm_cap / s)
    return DynamicsMatrix(entries=A)


def random_spd(n: int, rng, cond_floor: float = 0.1) -> np.ndarray:
    B = rng.normal(size=(n, n))
    return B @ B.T + cond_floor * np.eye(n)


def expm_taylor(A: np.ndarray, t: float, terms: int = 30) -> np.ndarray:
    """Truncated Taylor series for exp(A t); independent of scipy's expm."""
    n = A.shape[0]
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ (A * t) / k
        out = out + term
    return out


def simpson_gramian_with_B(
    A: np.ndarray, B: np.ndarray, T: float, steps: int = 2000
) -> np.ndarray:
    """Simpson quadrature of int exp(At) B B^T exp(A^T t) dt with explicit B."""
    assert steps % 2 == 0
    h = T / steps
    import scipy.linalg

    E = scipy.linalg.expm(A * h)
    X = B.copy()
    acc = X @ X.T
    for k in range(1, steps + 1):
        X = E @ X
        w = 1.0 if k == steps else (4.0 if k % 2 == 1 else 2.0)
        acc = acc + w * (X @ X.T)
    G = acc * h / 3.0
    return 0.5 * (G + G.T)


def rel_fro(X: np.ndarray, Y: np.ndarray) -> float:
    return np.linalg.norm(X - Y) / max(np.linalg.norm(Y), 1e-300)
