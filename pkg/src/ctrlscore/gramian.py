"""Finite-horizon controllability Gramians for node-wise virtual actuation.

Each node i carries a single virtual input channel e_i; its Gramian is
W_i(T) = int_0^T exp(At) e_i e_i^T exp(A^T t) dt, computed by the Van Loan
block-exponential method.  The allocation-weighted aggregate
W(p, T) = sum_i p_i W_i(T) is linear in p, which is what makes simplex
optimization over allocations tractable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import HorizonOverflowError, InvalidHorizonError


class Provenance(str, Enum):
    RAW = "raw"
    NEGATIVE_LAPLACIAN = "negative_laplacian"


class GramianMethod(str, Enum):
    VAN_LOAN = "van_loan"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class DynamicsMatrix:
    """System matrix A of the autonomous network dynamics xdot = A x."""

    entries: np.ndarray
    provenance: Provenance = Provenance.RAW

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"dynamics matrix must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("dynamics matrix contains non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)
        if self.provenance == Provenance.NEGATIVE_LAPLACIAN and A.size:
            row_sums = A.sum(axis=1)
            tol = 1e-9 * self.n * max(np.abs(A).max(), 1e-300)
            worst = np.abs(row_sums).max()
            if worst > tol:
                raise ValueError(
                    f"negative-Laplacian matrix has row-sum deviation {worst:.3e} > {tol:.3e}"
                )

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class NodeGramianSet:
    """All n per-node Gramians W_i(T), precomputed once per (A, T).

    `gramians` is an (n, n, n) stack; gramians[i] = W_i(T).
    """

    horizon: float
    gramians: np.ndarray
    method: GramianMethod = GramianMethod.VAN_LOAN

    def __post_init__(self):
        W = np.array(self.gramians, dtype=float)
        if W.ndim != 3 or W.shape[1] != W.shape[2] or W.shape[0] != W.shape[1]:
            raise ValueError(f"expected an (n, n, n) Gramian stack, got shape {W.shape}")
        if self.horizon <= 0:
            raise InvalidHorizonError(f"horizon must be positive, got {self.horizon}")
        W.setflags(write=False)
        object.__setattr__(self, "gramians", W)

    @property
    def n(self) -> int:
        return self.gramians.shape[0]


class FeasibilityResult(NamedTuple):
    feasible: bool
    lambda_min: float


def matrix_exp(A: np.ndarray, t: float) -> np.ndarray:
    """exp(A*t) via scaling-and-squaring with Pade approximants.

    Raises HorizonOverflowError when the result leaves the representable
    range instead of propagating NaN/inf.
    """
    A = np.asarray(A, dtype=float)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    if t == 0:
        return np.eye(A.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A * t)
    if not np.all(np.isfinite(E)):
        raise HorizonOverflowError(
            f"exp(A*t) overflowed at t={t}; horizon too long for this spectrum"
        )
    return E


def _symmetrize(W: np.ndarray) -> np.ndarray:
    return 0.5 * (W + W.T)


def node_gramians(A: DynamicsMatrix, T: float) -> NodeGramianSet:
    """Compute all W_i(T) by the Van Loan block method with horizon doubling.

    For each node, form H = [[-A, e_i e_i^T], [0, A^T]], take F = exp(H*T0)
    and read off W_i(T0) = F22^T @ F12.  The block form is ill-conditioned
    when ||A||*T is large (the top-left block is exp(-A T0)), so T0 is T
    halved until ||A||*T0 is modest and the result is propagated to T via
    the exact identity W(2t) = W(t) + exp(At) W(t) exp(A^T t).
    """
    if T <= 0:
        raise InvalidHorizonError(f"horizon must be positive, got T={T}")
    Amat = A.entries
    n = A.n
    norm_AT = np.linalg.norm(Amat, 2) * T
    doublings = max(0, int(np.ceil(np.log2(max(norm_AT / 2.0, 1.0)))))
    T0 = T / 2**doublings

    W = np.empty((n, n, n))
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = -Amat
    H[n:, n:] = Amat.T
    for i in range(n):
        H[:n, n:] = 0.0
        H[i, n + i] = 1.0
        F = matrix_exp(H, T0)
        F12 = F[:n, n:]
        F22 = F[n:, n:]
        W[i] = _symmetrize(F22.T @ F12)

    E = matrix_exp(Amat, T0)
    for _ in range(doublings):
        for i in range(n):
            W[i] = _symmetrize(W[i] + E @ W[i] @ E.T)
        E = E @ E
        if not np.all(np.isfinite(E)) or not np.all(np.isfinite(W)):
            raise HorizonOverflowError(
                f"Gramian propagation overflowed before reaching T={T}"
            )
    return NodeGramianSet(horizon=float(T), gramians=W, method=GramianMethod.VAN_LOAN)


def gramian_quadrature_oracle(
    A: DynamicsMatrix | np.ndarray, i: int, T: float, steps: int
) -> np.ndarray:
    """Composite-Simpson quadrature of the node-Gramian integrand.

    Independent of the Van Loan path; O(h^4) error.  `steps` must be even.
    """
    if steps < 2 or steps % 2 != 0:
        raise ValueError(f"steps must be even and >= 2, got {steps}")
    if T <= 0:
        raise InvalidHorizonError(f"horizon must be positive, got T={T}")
    Amat = A.entries if isinstance(A, DynamicsMatrix) else np.asarray(A, dtype=float)
    n = Amat.shape[0]
    h = T / steps
    E = matrix_exp(Amat, h)
    v = np.zeros(n)
    v[i] = 1.0
    acc = np.outer(v, v)  # weight-1 endpoint t=0
    for k in range(1, steps + 1):
        v = E @ v
        w = 1.0 if k == steps else (4.0 if k % 2 == 1 else 2.0)
        acc += w * np.outer(v, v)
    return _symmetrize(acc * h / 3.0)


def aggregate_gramian(gs: NodeGramianSet, p: np.ndarray) -> np.ndarray:
    """W(p, T) = sum_i p_i W_i(T).

    Works directly on the precomputed node Gramians; the diagonal
    square-root input matrix is never materialized.
    """
    weights = np.asarray(getattr(p, "p", p), dtype=float)
    if weights.shape != (gs.n,):
        raise ValueError(
            f"allocation has {weights.shape} entries, Gramian set has n={gs.n}"
        )
    return _symmetrize(np.einsum("i,ijk->jk", weights, gs.gramians))


def feasibility(W: np.ndarray) -> FeasibilityResult:
    """Check W(p, T) > 0: Cholesky succeeds and lambda_min clears a relative floor.

    Never raises; singular/indefinite W just reports infeasible.
    """
    W = np.asarray(W, dtype=float)
    eigs = np.linalg.eigvalsh(W)
    lam_min = float(eigs[0])
    lam_max = float(eigs[-1])
    if lam_min <= 1e-12 * max(1.0, lam_max):
        return FeasibilityResult(False, lam_min)
    try:
        np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        return FeasibilityResult(False, lam_min)
    return FeasibilityResult(True, lam_min)
