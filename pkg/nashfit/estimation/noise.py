"""Error covariance estimates Ĝ and whitening by Ĝ^{-1/2}.

Ĝ is never stored densely: diagonal kinds keep their diagonal, the block kind
keeps one (ℓ_i + 1)-square block per player together with the row indices of
every observation block it applies to.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ..linalg import PD_FLOOR, NormalEquations, floor_psd, sym_power
from .system import RegressionSystem

logger = logging.getLogger("Nashfit.estimation")

# leverages at or above 1 - LEVERAGE_CAP_EPS are clipped before (1 - b)^δ
LEVERAGE_CAP_EPS = 1e-12
HC4_MAX_DELTA = 4.0


class NoiseKind(str, enum.Enum):
    SPHERICAL = "spherical"
    FREEDMAN = "freedman-block"
    HC4 = "hc4"


@dataclass(frozen=True, eq=False)
class NoiseBlock:
    player_id: int
    matrix: np.ndarray
    rows: np.ndarray  # (n_i, block size)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    kind: NoiseKind
    n_d: int
    diagonal: Optional[np.ndarray] = None
    blocks: Tuple[NoiseBlock, ...] = ()
    details: dict = field(default_factory=dict)

    @classmethod
    def spherical(cls, n_d: int, sigma2: float, floor: float = PD_FLOOR) -> "NoiseModel":
        return cls(NoiseKind.SPHERICAL, n_d, diagonal=np.full(n_d, max(float(sigma2), floor)))

    @property
    def G_hat(self) -> np.ndarray:
        if self.diagonal is not None:
            return np.diag(self.diagonal)
        G = np.zeros((self.n_d, self.n_d))
        for b in self.blocks:
            for rows in b.rows:
                G[np.ix_(rows, rows)] = b.matrix
        return G

    def min_eigenvalue(self) -> float:
        if self.diagonal is not None:
            return float(np.min(self.diagonal)) if self.n_d else np.inf
        return min((float(np.linalg.eigvalsh(b.matrix)[0]) for b in self.blocks), default=np.inf)

    def apply_power(self, M: np.ndarray, power: float) -> np.ndarray:
        """Ĝ^power @ M, blockwise."""
        M = np.asarray(M, dtype=float)
        vector = M.ndim == 1
        A = M[:, None] if vector else M
        if self.diagonal is not None:
            out = (self.diagonal**power)[:, None] * A
        else:
            out = A.copy()
            for b in self.blocks:
                W = sym_power(b.matrix, power)
                out[b.rows] = np.einsum("ab,kbc->kac", W, A[b.rows])
        return out[:, 0] if vector else out

    def sqrt_apply(self, v: np.ndarray) -> np.ndarray:
        return self.apply_power(v, 0.5)

    def inv_sqrt_apply(self, M: np.ndarray) -> np.ndarray:
        return self.apply_power(M, -0.5)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "n_d": self.n_d, "min_eigenvalue": self.min_eigenvalue()}
        if self.kind is NoiseKind.FREEDMAN:
            out["blocks"] = {str(b.player_id): b.matrix for b in self.blocks}
        elif self.kind is NoiseKind.HC4:
            out["delta_range"] = [
                float(np.min(self.details["delta"])) if self.n_d else None,
                float(np.max(self.details["delta"])) if self.n_d else None,
            ]
        else:
            out["sigma2"] = float(self.diagonal[0]) if self.n_d else None
        return out


def estimate_noise_spherical(system: RegressionSystem, e: np.ndarray) -> NoiseModel:
    """σ̂²I with the residual degrees of freedom of the free design."""
    dof = max(system.n_d - int(np.sum(system.feasible.free_mask)), 1)
    return NoiseModel.spherical(system.n_d, float(e @ e) / dof)


def estimate_noise_freedman(system: RegressionSystem, e: np.ndarray) -> NoiseModel:
    """Per-player B̂_i = n_i^{-1} Σ_t e_t e_tᵀ, repeated for each of the player's observations."""
    e = np.asarray(e, dtype=float)
    blocks = []
    for seg in system.layout.segments:
        rows = system.row_blocks(seg.player_id)
        if len(rows) == 0:
            logger.debug(f"Player {seg.player_id} has no rows; skipped in block estimate")
            continue
        E = e[rows]
        B = floor_psd(E.T @ E / len(rows))
        blocks.append(NoiseBlock(seg.player_id, B, rows))
    return NoiseModel(NoiseKind.FREEDMAN, system.n_d, blocks=tuple(blocks))


def hc4_leverage(system: RegressionSystem) -> Tuple[np.ndarray, bool]:
    X_free, _, _ = system.free_design()
    normal = NormalEquations.from_design(X_free)
    b = np.clip(normal.leverages(), 0.0, 1.0 - LEVERAGE_CAP_EPS)
    return b, normal.ridge_used


def estimate_noise_hc4(system: RegressionSystem, e: np.ndarray) -> NoiseModel:
    """diag(e_i² / (1 - b_i)^δ_i) with δ_i = min(4, n_d b_i / Σ b)."""
    e = np.asarray(e, dtype=float)
    b, ridge_used = hc4_leverage(system)
    total = float(np.sum(b))
    if total > 0:
        delta = np.minimum(HC4_MAX_DELTA, system.n_d * b / total)
    else:
        delta = np.zeros_like(b)
    # b_i = 0 rows (active fixings, empty columns) leave (1 - b)^δ = 1 for any δ
    delta = np.maximum(delta, np.finfo(float).eps)
    g = e**2 / (1.0 - b) ** delta
    return NoiseModel(
        NoiseKind.HC4,
        system.n_d,
        diagonal=np.maximum(g, PD_FLOOR),
        details={"leverage": b, "delta": delta, "ridge_used": ridge_used},
    )


def estimate_noise(kind: NoiseKind, system: RegressionSystem, e: np.ndarray) -> NoiseModel:
    kind = NoiseKind(kind)
    if kind is NoiseKind.FREEDMAN:
        return estimate_noise_freedman(system, e)
    if kind is NoiseKind.HC4:
        return estimate_noise_hc4(system, e)
    return estimate_noise_spherical(system, e)


def whiten(system: RegressionSystem, noise: NoiseModel) -> RegressionSystem:
    """(Ĝ^{-1/2}X, Ĝ^{-1/2}Y) with layout, feasible set and row metadata unchanged."""
    return replace(
        system,
        X=noise.inv_sqrt_apply(system.X),
        Y=noise.inv_sqrt_apply(system.Y),
        whitened=True,
    )
