"""Constrained least squares over the coefficient box 𝓑."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import optimize

from ..exceptions import NumericalError
from ..linalg import RIDGE_LAMBDA, is_rank_deficient
from .noise import NoiseModel, estimate_noise_spherical
from .system import CoefficientLayout, FeasibleSet, RegressionSystem

logger = logging.getLogger("Nashfit.estimation")

KKT_TOL = 1e-8


class Method(str, enum.Enum):
    COLS = "cOLS"
    CFGLS = "cFGLS"
    BAGGING = "bagging"
    BUMPING = "bumping"
    BOOSTING = "boosting"


@dataclass
class EstimatorResult:
    beta_hat: np.ndarray
    method: str
    residuals: np.ndarray
    noise: Optional[NoiseModel]
    objective: float
    layout: CoefficientLayout
    diagnostics: Dict = field(default_factory=dict)

    def theta(self, player_id: int) -> np.ndarray:
        return self.layout.theta_of(self.beta_hat, player_id)

    def mu(self, player_id: int) -> np.ndarray:
        return self.layout.mu_of(self.beta_hat, player_id)

    @property
    def thetas(self) -> Dict[int, np.ndarray]:
        return self.layout.thetas(self.beta_hat)

    def to_dict(self) -> dict:
        return {
            "method": str(getattr(self.method, "value", self.method)),
            "labels": list(self.layout.labels),
            "beta_hat": self.layout.labeled(self.beta_hat),
            "thetas": {str(pid): t for pid, t in self.thetas.items()},
            "objective": self.objective,
            "noise": None if self.noise is None else self.noise.to_dict(),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class BoxLSQSolution:
    beta: np.ndarray
    ridge_used: bool
    kkt_residual: float
    iterations: int


def _projected_gradient_norm(X: np.ndarray, Y: np.ndarray, beta: np.ndarray, lb, ub) -> float:
    """Norm of the KKT violation of min ½‖Y - Xβ‖² over lb ≤ β ≤ ub."""
    if X.shape[1] == 0:
        return 0.0
    g = X.T @ (X @ beta - Y)
    scale = max(1.0, float(np.linalg.norm(X.T @ Y)))
    at_lower = beta <= lb + 1e-12
    at_upper = beta >= ub - 1e-12
    viol = g.copy()
    viol[at_lower] = np.minimum(g[at_lower], 0.0)
    viol[at_upper] = np.maximum(g[at_upper], 0.0)
    return float(np.linalg.norm(viol)) / scale


def solve_box_lsq(X: np.ndarray, Y: np.ndarray, feasible: FeasibleSet, ridge: float = RIDGE_LAMBDA) -> BoxLSQSolution:
    """argmin ‖Y - Xβ‖₂ over 𝓑; fixed coefficients are substituted, the rest solved by BVLS."""
    fixed = feasible.fixed_mask
    free = ~fixed
    beta = np.zeros(X.shape[1])
    beta[fixed] = feasible.lower[fixed]
    Xf = X[:, free]
    Yf = Y - X[:, fixed] @ beta[fixed] if np.any(fixed) else Y
    lb, ub = feasible.lower[free], feasible.upper[free]
    if Xf.shape[1] == 0:
        return BoxLSQSolution(beta, False, 0.0, 0)

    ridge_used = is_rank_deficient(Xf)
    A, b = Xf, Yf
    if ridge_used:
        logger.warning(f"Regression design is rank deficient or ill-conditioned; adding ridge lambda={ridge:g}")
        k = Xf.shape[1]
        A = np.vstack([Xf, np.sqrt(ridge) * np.eye(k)])
        b = np.concatenate([Yf, np.zeros(k)])

    res = optimize.lsq_linear(A, b, bounds=(lb, ub), method="bvls")
    if not np.all(np.isfinite(res.x)):
        raise NumericalError("Constrained least squares returned non-finite coefficients")
    if not res.success:
        logger.warning(f"Bounded least squares stopped early: {res.message}")
    beta[free] = np.clip(res.x, lb, ub)
    return BoxLSQSolution(
        beta=beta,
        ridge_used=ridge_used,
        kkt_residual=_projected_gradient_norm(A, b, beta[free], lb, ub),
        iterations=int(res.nit),
    )


def solve_cols(system: RegressionSystem, method: str = Method.COLS, noise: Optional[NoiseModel] = None) -> EstimatorResult:
    """Constrained OLS on ``system`` (already whitened when ``noise`` is given)."""
    sol = solve_box_lsq(system.X, system.Y, system.feasible)
    e = system.residuals(sol.beta)
    if sol.kkt_residual > KKT_TOL:
        logger.debug(f"KKT residual {sol.kkt_residual:.3g} exceeds {KKT_TOL:g}")
    return EstimatorResult(
        beta_hat=sol.beta,
        method=method,
        residuals=e,
        noise=noise if noise is not None else estimate_noise_spherical(system, e),
        objective=float(np.linalg.norm(e)),
        layout=system.layout,
        diagnostics={
            "ridge_used": sol.ridge_used,
            "kkt_residual": sol.kkt_residual,
            "solver_iterations": sol.iterations,
        },
    )


def project_feasible(system: RegressionSystem, beta: np.ndarray) -> np.ndarray:
    """Euclidean projection onto 𝓑 (a box, so a clip)."""
    return system.feasible.project(beta)
