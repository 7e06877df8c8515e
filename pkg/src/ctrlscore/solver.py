"""Objective, derivatives, and projected-gradient solver for the score.

The score is the minimizer of J(p) = tr(W(p,T)^{-1} M) over the probability
simplex, restricted to allocations whose aggregate Gramian is positive
definite.  The objective blows up at the singular boundary, so the Armijo
line search simply rejects infeasible trial points as if J were +inf there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import InfeasibleAllocationError, StagnationError
from .gramian import NodeGramianSet, aggregate_gramian, feasibility
from .task_weighting import WeightMatrix


@dataclass(frozen=True)
class Allocation:
    """A point on the probability simplex: the resource shares themselves."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1:
            raise ValueError(f"allocation must be a vector, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError(f"allocation has negative entries (min {p.min():.3e})")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"allocation sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @staticmethod
    def uniform(n: int) -> "Allocation":
        return Allocation(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 10000
    armijo_sigma: float = 1e-4
    armijo_beta: float = 0.5
    init_step: float = 1.0
    tol_step: float = 1e-9
    tol_gradmap: float = 1e-8
    start: Optional[Allocation] = None
    record_trace: bool = False

    def __post_init__(self):
        if not (0 < self.armijo_sigma < 1 and 0 < self.armijo_beta < 1):
            raise ValueError("Armijo constants must lie in (0, 1)")
        if self.tol_step <= 0 or self.tol_gradmap <= 0 or self.init_step <= 0:
            raise ValueError("tolerances and init_step must be positive")


@dataclass(frozen=True)
class ScoreReport:
    score: Allocation
    objective_value: float
    iterations: int
    converged: bool
    gradient_map_norm: float
    lambda_min_final: float
    uniqueness_caveat: bool = False
    warning: Optional[str] = None
    trace: Optional[list[tuple[int, float, float]]] = None


def _as_matrix(M) -> np.ndarray:
    return M.M if isinstance(M, WeightMatrix) else np.asarray(M, dtype=float)


def _factor(W: np.ndarray):
    """Cholesky factor of W, or an infeasibility error carrying lambda_min."""
    res = feasibility(W)
    if not res.feasible:
        raise InfeasibleAllocationError(
            f"aggregate Gramian is singular or indefinite "
            f"(lambda_min={res.lambda_min:.3e})",
            lambda_min=res.lambda_min,
        )
    return scipy.linalg.cho_factor(W, lower=True), res.lambda_min


def objective(p: Allocation, gs: NodeGramianSet, M) -> float:
    """J(p) = tr(W(p,T)^{-1} M), via Cholesky solve (no explicit inverse)."""
    Mmat = _as_matrix(M)
    W = aggregate_gramian(gs, p)
    c, _ = _factor(W)
    return float(np.trace(scipy.linalg.cho_solve(c, Mmat)))


def min_energy(
    x0: np.ndarray, xT: np.ndarray, p: Allocation, gs: NodeGramianSet, Phi: np.ndarray
) -> float:
    """Minimum steering energy z^T W(p,T)^{-1} z with z = xT - exp(A T) x0.

    Phi is the precomputed state-transition matrix exp(A*T).
    """
    z = np.asarray(xT, dtype=float) - np.asarray(Phi, dtype=float) @ np.asarray(
        x0, dtype=float
    )
    W = aggregate_gramian(gs, p)
    c, _ = _factor(W)
    return float(z @ scipy.linalg.cho_solve(c, z))


def gradient(p: Allocation, gs: NodeGramianSet, M) -> np.ndarray:
    """Gradient components -tr(W^{-1} W_i W^{-1} M).

    Forms K = W^{-1} M W^{-1} once, then takes Frobenius inner products with
    each node Gramian.
    """
    Mmat = _as_matrix(M)
    W = aggregate_gramian(gs, p)
    c, _ = _factor(W)
    Y = scipy.linalg.cho_solve(c, Mmat)          # W^{-1} M
    K = scipy.linalg.cho_solve(c, Y.T)           # W^{-1} M W^{-1} (M symmetric)
    K = 0.5 * (K + K.T)
    return -np.einsum("ab,iab->i", K, gs.gramians)


def second_directional(p: Allocation, d: np.ndarray, gs: NodeGramianSet, M) -> float:
    """Second directional derivative 2 tr(W^{-1} DW W^{-1} DW W^{-1} M).

    d must be tangent to the simplex (entries summing to zero).
    """
    d = np.asarray(d, dtype=float)
    if abs(d.sum()) > 1e-10 * max(1.0, np.abs(d).max()):
        raise ValueError(f"direction is not tangent to the simplex (sum {d.sum():.3e})")
    Mmat = _as_matrix(M)
    W = aggregate_gramian(gs, p)
    c, _ = _factor(W)
    DW = np.einsum("i,ijk->jk", d, gs.gramians)
    X = scipy.linalg.cho_solve(c, DW)            # W^{-1} DW
    Y = scipy.linalg.cho_solve(c, Mmat)          # W^{-1} M
    return float(2.0 * np.trace(X @ X @ Y))


def project_simplex(v: np.ndarray) -> Allocation:
    """Euclidean projection onto the simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    p = np.maximum(v - tau, 0.0)
    # guard against accumulated roundoff in the sum constraint
    s = p.sum()
    if s != 1.0 and s > 0:
        p = p / s
    return Allocation(p)


def _try_objective(p: Allocation, gs: NodeGramianSet, Mmat: np.ndarray) -> float:
    """Objective with infeasible points mapped to +inf (for line search)."""
    try:
        return objective(p, gs, Mmat)
    except InfeasibleAllocationError:
        return np.inf


def solve(gs: NodeGramianSet, M, opts: SolverOptions = SolverOptions()) -> ScoreReport:
    """Projected gradient with Armijo backtracking along the projection arc."""
    Mmat = _as_matrix(M)
    uniqueness_caveat = isinstance(M, WeightMatrix) and not M.positive_definite
    n = gs.n
    p = opts.start if opts.start is not None else Allocation.uniform(n)
    if p.n != n:
        raise ValueError(f"start point has n={p.n}, Gramian set has n={n}")

    W = aggregate_gramian(gs, p)
    res = feasibility(W)
    if not res.feasible:
        raise InfeasibleAllocationError(
            f"start point infeasible (lambda_min={res.lambda_min:.3e})",
            lambda_min=res.lambda_min,
        )

    if np.abs(Mmat).max() == 0.0:
        # degenerate zero weight: objective identically 0
        return ScoreReport(
            score=p,
            objective_value=0.0,
            iterations=0,
            converged=True,
            gradient_map_norm=0.0,
            lambda_min_final=res.lambda_min,
            uniqueness_caveat=True,
            warning="zero weight matrix: objective is constant",
            trace=[] if opts.record_trace else None,
        )

    trace: Optional[list[tuple[int, float, float]]] = [] if opts.record_trace else None
    J = objective(p, gs, Mmat)
    converged = False
    gm_norm = np.inf
    it = 0
    for it in range(1, opts.max_iters + 1):
        g = gradient(p, gs, Mmat)
        gm_norm = float(np.linalg.norm(project_simplex(p.p - g).p - p.p))
        if gm_norm < opts.tol_gradmap:
            converged = True
            it -= 1
            break

        # Armijo backtracking along the projection arc
        accepted = False
        alpha = opts.init_step
        for _ in range(61):
            cand = project_simplex(p.p - alpha * g)
            step = cand.p - p.p
            J_cand = _try_objective(cand, gs, Mmat)
            if J_cand <= J + opts.armijo_sigma * float(g @ step):
                accepted = True
                break
            alpha *= opts.armijo_beta
        if not accepted:
            raise StagnationError(
                f"Armijo search failed at iteration {it} (no admissible step)"
            )
        if J_cand >= J:
            # objective at the roundoff floor: no representable decrease left
            converged = True
            break
        if trace is not None:
            trace.append((it, J_cand, alpha))
        step_inf = float(np.abs(cand.p - p.p).max())
        p, J = cand, J_cand
        if step_inf < opts.tol_step:
            converged = True
            break

    W = aggregate_gramian(gs, p)
    lam_min = feasibility(W).lambda_min
    return ScoreReport(
        score=p,
        objective_value=J,
        iterations=it,
        converged=converged,
        gradient_map_norm=gm_norm,
        lambda_min_final=lam_min,
        uniqueness_caveat=uniqueness_caveat,
        trace=trace,
    )


def _simplex_lattice(n: int, k: int) -> np.ndarray:
    """All compositions of k into n nonnegative parts, as a (N, n) array."""
    if n == 1:
        return np.array([[k]])
    blocks = []
    for first in range(k + 1):
        rest = _simplex_lattice(n - 1, k - first)
        blocks.append(
            np.column_stack([np.full(len(rest), first, dtype=int), rest])
        )
    return np.vstack(blocks)


def grid_oracle(gs: NodeGramianSet, M, resolution: float) -> Allocation:
    """Brute-force lattice minimizer of the objective; only for n <= 4.

    Exhaustive, independent of the projected-gradient path; used to
    cross-validate solve().
    """
    n = gs.n
    if n > 4:
        raise ValueError(f"grid oracle refuses n={n} > 4 (combinatorial blow-up)")
    if not (0 < resolution <= 0.1):
        raise ValueError(f"resolution must lie in (0, 0.1], got {resolution}")
    k = int(round(1.0 / resolution))
    lattice = _simplex_lattice(n, k).astype(float) / k
    if lattice.shape[0] > 5_000_000:
        raise ValueError("lattice too large; coarsen the resolution")
    Mmat = _as_matrix(M)

    best_val = np.inf
    best_p = None
    chunk = 200_000
    for lo in range(0, lattice.shape[0], chunk):
        P = lattice[lo : lo + chunk]
        Wb = np.einsum("Ni,ijk->Njk", P, gs.gramians)
        eigs, V = np.linalg.eigh(Wb)
        ok = eigs[:, 0] > 1e-12 * np.maximum(1.0, eigs[:, -1])
        if not np.any(ok):
            continue
        eigs, V, Pok = eigs[ok], V[ok], P[ok]
        # tr(W^{-1} M) = sum_j (v_j^T M v_j) / lam_j
        quad = np.einsum("Nab,bc,Nac->Na", V.transpose(0, 2, 1), Mmat, V.transpose(0, 2, 1))
        vals = np.sum(quad / eigs, axis=1)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_p = Pok[j]
    if best_p is None:
        raise InfeasibleAllocationError("no feasible lattice point found")
    return Allocation(best_p)
