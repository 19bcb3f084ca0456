"""Bagging, bumping and L2 gradient boosting over constrained GLS fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import DimensionError, EstimationError
from ..estimation.noise import NoiseModel
from ..estimation.solvers import EstimatorResult, Method
from ..estimation.system import RegressionSystem
from ..linalg import NormalEquations, symmetrize

logger = logging.getLogger("Nashfit.ensemble")

DEFAULT_NU = 0.1
DEFAULT_M_MAX = 500


@dataclass
class EnsembleOutput:
    beta_hat: np.ndarray
    method: Method
    member_estimates: List[np.ndarray]
    pre_projection: np.ndarray
    covariance: Optional[np.ndarray] = None
    selection_index: Optional[int] = None
    training_errors: Optional[List[float]] = None
    aic_trace: Optional[List[float]] = None
    m_hat: Optional[int] = None
    residual_norms: Optional[List[float]] = None

    def to_result(self, system: RegressionSystem, noise: Optional[NoiseModel] = None) -> EstimatorResult:
        e = system.residuals(self.beta_hat)
        diagnostics = {
            "members": len(self.member_estimates),
            "projected": bool(np.any(self.pre_projection != self.beta_hat)),
            "pre_projection": self.pre_projection,
        }
        if self.covariance is not None:
            diagnostics["covariance"] = self.covariance
        if self.selection_index is not None:
            diagnostics["selection_index"] = self.selection_index
            diagnostics["training_errors"] = self.training_errors
        if self.m_hat is not None:
            diagnostics["m_hat"] = self.m_hat
            diagnostics["aic_trace"] = self.aic_trace
        return EstimatorResult(
            beta_hat=self.beta_hat,
            method=self.method,
            residuals=e,
            noise=noise,
            objective=float(np.linalg.norm(e)),
            layout=system.layout,
            diagnostics=diagnostics,
        )


def _stack(member_estimates: Sequence[np.ndarray]) -> np.ndarray:
    if len(member_estimates) == 0:
        raise EstimationError("Ensemble has no members")
    sizes = {len(np.asarray(b)) for b in member_estimates}
    if len(sizes) != 1:
        raise DimensionError(f"Ensemble members differ in length: {sorted(sizes)}")
    return np.vstack([np.asarray(b, dtype=float) for b in member_estimates])


def bagging(member_estimates: Sequence[np.ndarray], system: Optional[RegressionSystem] = None) -> EnsembleOutput:
    """Mean of the members with the empirical (1/N) covariance Ĉ_β."""
    B = _stack(member_estimates)
    mean = B.mean(axis=0)
    D = B - mean
    cov = symmetrize(D.T @ D / len(B))
    beta = system.feasible.project(mean) if system is not None else mean
    return EnsembleOutput(
        beta_hat=beta,
        method=Method.BAGGING,
        member_estimates=list(B),
        pre_projection=mean,
        covariance=cov,
    )


def bumping(system: RegressionSystem, member_estimates: Sequence[np.ndarray]) -> EnsembleOutput:
    """The candidate with least training error on the original (X, Y); member 0 is the original fit."""
    B = _stack(member_estimates)
    errors = [float(r @ r) for r in (system.Y - B @ system.X.T)]
    index = int(np.argmin(errors))
    chosen = B[index].copy()
    return EnsembleOutput(
        beta_hat=chosen,
        method=Method.BUMPING,
        member_estimates=list(B),
        pre_projection=chosen,
        selection_index=index,
        training_errors=errors,
    )


@dataclass(frozen=True)
class AICSelection:
    trace: List[float]
    m_hat: int


def boosting_aic(system: RegressionSystem, nu: float, m_max: int) -> AICSelection:
    """AIC_m for m = 1..M_max-1 from the spectrum of Ĥ; M̂ is the argmin.

    Exact fits (σ²_m = 0) score -inf and win at the earliest such m. Steps whose
    denominator 1 - (Tr(B_m) + 2)/n_d is not positive are excluded (NaN).
    """
    X_free, Y, _ = system.free_design()
    n_d = system.n_d
    normal = NormalEquations.from_design(X_free)
    w, V = np.linalg.eigh(symmetrize(normal.hat_matrix()))
    w = np.clip(w, 0.0, 1.0)
    coef = V.T @ Y
    exact_tol = 1e-24 * max(float(np.mean(Y**2)), np.finfo(float).tiny)

    trace = []
    for m in range(1, m_max):
        shrink = (1.0 - nu * w) ** m  # spectrum of R_m
        fitted = V @ ((1.0 - shrink) * coef)
        sigma2 = float(np.mean((Y - fitted) ** 2))
        tr_b = float(np.sum(1.0 - shrink))
        denom = 1.0 - (tr_b + 2.0) / n_d
        if sigma2 <= exact_tol:
            trace.append(-math.inf)
        elif denom <= 0:
            trace.append(math.nan)
        else:
            trace.append(math.log(sigma2) + (1.0 + tr_b / n_d) / denom)

    scores = np.array(trace, dtype=float)
    valid = ~np.isnan(scores)
    if not np.any(valid):
        if m_max > 1:
            logger.warning("Every boosting step has a degenerate AIC denominator; stopping after one step")
        return AICSelection(trace, 1)
    excluded = int(np.sum(~valid))
    if excluded:
        logger.warning(f"{excluded} boosting step(s) excluded from AIC selection (degenerate denominator)")
    best = np.min(scores[valid])
    m_hat = int(np.flatnonzero(valid & (scores == best))[0]) + 1
    return AICSelection(trace, m_hat)


def gradient_boost(
    system: RegressionSystem,
    nu: float = DEFAULT_NU,
    m_max: int = DEFAULT_M_MAX,
    beta_init: Optional[np.ndarray] = None,
    steps: Optional[int] = None,
) -> EnsembleOutput:
    """Residual refits β ← β + ν (XᵀX)^{-1}Xᵀe from β_init, M̂ times, then projected onto 𝓑."""
    if not 0 < nu <= 1:
        raise EstimationError(f"Shrinkage nu must lie in (0, 1], got {nu}")
    if m_max < 1:
        raise EstimationError("M_max must be at least 1")
    selection = boosting_aic(system, nu, m_max)
    n_steps = selection.m_hat if steps is None else int(steps)

    free = system.feasible.free_mask
    if beta_init is None:
        beta = system.feasible.project(np.zeros(system.layout.size))
    else:
        beta = np.array(beta_init, dtype=float)
    normal = NormalEquations.from_design(system.X[:, free])
    e = system.residuals(beta)
    norms = [float(np.linalg.norm(e))]
    for _ in range(n_steps):
        beta[free] += nu * normal.solve(e)
        e = system.residuals(beta)
        norms.append(float(np.linalg.norm(e)))

    return EnsembleOutput(
        beta_hat=system.feasible.project(beta),
        method=Method.BOOSTING,
        member_estimates=[],
        pre_projection=beta,
        aic_trace=selection.trace,
        m_hat=selection.m_hat,
        residual_norms=norms,
    )
