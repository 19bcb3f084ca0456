"""Small dense linear-algebra helpers shared by the estimators.

Every routine is deterministic. Rank-deficient or ill-conditioned normal equations
fall back to a ridge term ``RIDGE_LAMBDA * I``; callers record the fallback as a
diagnostic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .exceptions import NumericalError

RIDGE_LAMBDA = 1e-8
PD_FLOOR = 1e-8
# cond(X) above this makes cond(XᵀX) exceed 1/eps
COND_LIMIT = 1.0 / np.sqrt(np.finfo(float).eps)

logger = logging.getLogger("Nashfit.linalg")


def is_rank_deficient(X: np.ndarray) -> bool:
    """True when X lacks full column rank or XᵀX is singular to working precision."""
    if X.shape[1] == 0:
        return False
    if X.shape[0] < X.shape[1]:
        return True
    s = np.linalg.svd(X, compute_uv=False)
    return bool(s[-1] <= s[0] / COND_LIMIT)


@dataclass(frozen=True)
class NormalEquations:
    """Cholesky factor of XᵀX (+ λI when the design is rank deficient)."""

    X: np.ndarray
    factor: tuple
    ridge_used: bool

    @classmethod
    def from_design(cls, X: np.ndarray, ridge: float = RIDGE_LAMBDA) -> "NormalEquations":
        X = np.asarray(X, dtype=float)
        gram = X.T @ X
        if not is_rank_deficient(X):
            try:
                return cls(X=X, factor=sla.cho_factor(gram), ridge_used=False)
            except np.linalg.LinAlgError:
                pass
        logger.warning(f"Design matrix is rank deficient or ill-conditioned; using ridge fallback (lambda={ridge:g})")
        # λ grows until the factorization succeeds; past the Gram scale the data are unusable
        scale = max(1.0, float(np.max(np.diag(gram), initial=0.0)))
        lam = ridge
        while True:
            try:
                factor = sla.cho_factor(gram + lam * np.eye(gram.shape[0]))
                break
            except np.linalg.LinAlgError:
                if lam > scale:
                    raise NumericalError("Normal equations are not positive definite even with a ridge term") from None
                lam *= 100.0
        if lam != ridge:
            logger.warning(f"Ridge raised to lambda={lam:g}")
        return cls(X=X, factor=factor, ridge_used=True)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Returns (XᵀX)^{-1} XᵀY for a data vector Y."""
        if self.X.shape[1] == 0:
            return np.zeros(0)
        return sla.cho_solve(self.factor, self.X.T @ rhs)

    def hat_matrix(self) -> np.ndarray:
        if self.X.shape[1] == 0:
            return np.zeros((self.X.shape[0], self.X.shape[0]))
        return self.X @ sla.cho_solve(self.factor, self.X.T)

    def leverages(self) -> np.ndarray:
        """Diagonal of the hat matrix without forming it."""
        if self.X.shape[1] == 0:
            return np.zeros(self.X.shape[0])
        A = sla.cho_solve(self.factor, self.X.T)
        return np.einsum("ij,ji->i", self.X, A)


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def floor_psd(M: np.ndarray, floor: float = PD_FLOOR) -> np.ndarray:
    """Clips the eigenvalues of a symmetric matrix from below at ``floor``."""
    M = symmetrize(np.atleast_2d(np.asarray(M, dtype=float)))
    if M.shape == (1, 1):
        return np.array([[max(M[0, 0], floor)]])
    w, V = np.linalg.eigh(M)
    if np.all(w >= floor):
        return M
    w = np.maximum(w, floor)
    return symmetrize((V * w) @ V.T)


def sym_power(M: np.ndarray, power: float) -> np.ndarray:
    """M^power for a symmetric positive-definite matrix via eigendecomposition."""
    M = symmetrize(np.atleast_2d(np.asarray(M, dtype=float)))
    if M.shape == (1, 1):
        return np.array([[M[0, 0] ** power]])
    w, V = np.linalg.eigh(M)
    return symmetrize((V * w**power) @ V.T)
