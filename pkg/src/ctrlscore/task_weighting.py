"""Task weighting matrices built from displacement statistics.

The displacement of interest is z(T) = x_T - exp(A T) x_0 and the weight is
its second moment M = Cov(z) + E[z] E[z]^T.  Isotropic M recovers the plain
trace-inverse (AECS) objective; a deterministic target with a random start
is the workhorse case for the brain experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class TaskMode(str, Enum):
    DETERMINISTIC_TARGET = "deterministic_target"
    ISOTROPIC = "isotropic"
    SECOND_MOMENT = "second_moment"
    EXPLICIT_M = "explicit_M"


def _check_sym_psd(S: np.ndarray, name: str, tol: float = 1e-10) -> None:
    if not np.allclose(S, S.T, rtol=0, atol=tol * max(1.0, np.abs(S).max())):
        raise ValueError(f"{name} is not symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (S + S.T))
    if eigs[0] < -tol * max(1.0, eigs[-1]):
        raise ValueError(f"{name} is not PSD (lambda_min={eigs[0]:.3e})")


@dataclass(frozen=True)
class TaskSpec:
    """Declarative description of the transition whose energy is scored."""

    horizon: float
    mode: TaskMode
    n: int
    mu0: Optional[np.ndarray] = None
    sigma0: Optional[np.ndarray] = None
    xT: Optional[np.ndarray] = None
    muT: Optional[np.ndarray] = None
    sigmaT: Optional[np.ndarray] = None
    cross_cov: Optional[np.ndarray] = None
    M_explicit: Optional[np.ndarray] = None
    iso_scale: Optional[float] = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.sigma0 is not None:
            _check_sym_psd(np.asarray(self.sigma0), "sigma0")
        if self.sigmaT is not None:
            _check_sym_psd(np.asarray(self.sigmaT), "sigmaT")
        if self.mode == TaskMode.SECOND_MOMENT:
            # joint second-moment block [[sigmaT, C], [C^T, sigma0]] must be PSD
            C = np.asarray(self.cross_cov)
            top = np.hstack([np.asarray(self.sigmaT), C])
            bot = np.hstack([C.T, np.asarray(self.sigma0)])
            _check_sym_psd(np.vstack([top, bot]), "joint covariance block", tol=1e-8)
        if self.mode == TaskMode.ISOTROPIC and (
            self.iso_scale is None or self.iso_scale <= 0
        ):
            raise ValueError("isotropic mode requires iso_scale > 0")


@dataclass(frozen=True)
class WeightMatrix:
    """M = cov_z + mean_z mean_z^T, with a positive-definiteness flag."""

    M: np.ndarray
    mean_z: np.ndarray
    cov_z: np.ndarray
    positive_definite: bool

    @property
    def n(self) -> int:
        return self.M.shape[0]


def displacement_stats(
    spec: TaskSpec, Phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of z(T) given the state-transition matrix Phi = exp(A T).

    deterministic_target: mean_z = x_T - Phi mu0, cov_z = Phi Sigma0 Phi^T.
    second_moment: cov_z = SigmaT - C Phi^T - Phi C^T + Phi Sigma0 Phi^T with
    C = Cov(x_T, x_0), symmetrized and eigenvalue-clipped at zero.
    """
    Phi = np.asarray(Phi, dtype=float)
    if spec.mode == TaskMode.DETERMINISTIC_TARGET:
        mean_z = np.asarray(spec.xT, dtype=float) - Phi @ np.asarray(spec.mu0, dtype=float)
        cov_z = Phi @ np.asarray(spec.sigma0, dtype=float) @ Phi.T
        return mean_z, 0.5 * (cov_z + cov_z.T)
    if spec.mode == TaskMode.SECOND_MOMENT:
        C = np.asarray(spec.cross_cov, dtype=float)
        mean_z = np.asarray(spec.muT, dtype=float) - Phi @ np.asarray(spec.mu0, dtype=float)
        cov_z = (
            np.asarray(spec.sigmaT, dtype=float)
            - C @ Phi.T
            - Phi @ C.T
            + Phi @ np.asarray(spec.sigma0, dtype=float) @ Phi.T
        )
        cov_z = 0.5 * (cov_z + cov_z.T)
        eigs, V = np.linalg.eigh(cov_z)
        if eigs[0] < -1e-8 * max(1.0, eigs[-1]):
            raise ValueError(
                f"supplied second moments are inconsistent: Cov(z) has "
                f"lambda_min={eigs[0]:.3e}"
            )
        cov_z = (V * np.clip(eigs, 0.0, None)) @ V.T
        return mean_z, 0.5 * (cov_z + cov_z.T)
    raise ValueError(f"displacement_stats undefined for mode {spec.mode}")


def weight_matrix(mean_z: np.ndarray, cov_z: np.ndarray) -> WeightMatrix:
    """Assemble M = cov_z + mean_z mean_z^T."""
    mean_z = np.asarray(mean_z, dtype=float)
    cov_z = np.asarray(cov_z, dtype=float)
    _check_sym_psd(cov_z, "cov_z")
    M = cov_z + np.outer(mean_z, mean_z)
    M = 0.5 * (M + M.T)
    eigs = np.linalg.eigvalsh(M)
    pd = bool(eigs[0] > 1e-12 * max(eigs[-1], 0.0))
    return WeightMatrix(M=M, mean_z=mean_z, cov_z=cov_z, positive_definite=pd)


def isotropic_weight(n: int, scale: float = 1.0) -> WeightMatrix:
    """M = scale * I; scale in {1, 1/n} gives the standard AECS objective."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return WeightMatrix(
        M=scale * np.eye(n),
        mean_z=np.zeros(n),
        cov_z=scale * np.eye(n),
        positive_definite=True,
    )


def build_weight(spec: TaskSpec, Phi: Optional[np.ndarray] = None) -> WeightMatrix:
    """Construct the weight matrix for any task mode.

    Phi = exp(A*T) is required for the two displacement-based modes.
    """
    if spec.mode == TaskMode.ISOTROPIC:
        return isotropic_weight(spec.n, spec.iso_scale)
    if spec.mode == TaskMode.EXPLICIT_M:
        M = np.asarray(spec.M_explicit, dtype=float)
        _check_sym_psd(M, "explicit M")
        M = 0.5 * (M + M.T)
        eigs = np.linalg.eigvalsh(M)
        pd = bool(eigs[0] > 1e-12 * max(eigs[-1], 0.0))
        return WeightMatrix(
            M=M, mean_z=np.zeros(spec.n), cov_z=M, positive_definite=pd
        )
    if Phi is None:
        raise ValueError(f"mode {spec.mode.value} requires Phi = exp(A*T)")
    mean_z, cov_z = displacement_stats(spec, Phi)
    return weight_matrix(mean_z, cov_z)
