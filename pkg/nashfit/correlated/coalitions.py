"""Pseudo-coalitions read from the bagged covariance and the correlated utilities they induce.

Player i's correlated utility mixes the estimated weights of every j in its
coalition 𝒦_i, on player i's own basis::

    ĝ_i = Σ_j (α_ij / c_ij) (z_ij ψ_i + <θ̂_j, φ_i>)

where ψ_i is player i's known part. α defaults to the (row-normalized) σ_ij.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError, DimensionError
from ..estimation.system import CoefficientLayout
from ..game.spec import GameSpec, UtilitySpec
from ..linalg import PD_FLOOR, symmetrize

logger = logging.getLogger("Nashfit.correlated")


class SignRule(str, enum.Enum):
    SIGN = "sign"
    POSITIVE = "positive"


@dataclass(frozen=True, eq=False)
class CovarianceView:
    """σ_ij: the covariance of one designated θ coordinate per player."""

    sigma: np.ndarray
    player_ids: Tuple[int, ...]
    normalize: bool = True

    def __post_init__(self):
        sigma = symmetrize(np.atleast_2d(np.asarray(self.sigma, dtype=float)))
        if sigma.shape != (len(self.player_ids),) * 2:
            raise DimensionError("Covariance view does not match its player labels")
        idx = np.diag_indices_from(sigma)
        sigma[idx] = np.maximum(sigma[idx], PD_FLOOR)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "player_ids", tuple(self.player_ids))

    @classmethod
    def from_covariance(
        cls,
        covariance: np.ndarray,
        layout: CoefficientLayout,
        coordinates: Mapping[int, int],
        normalize: bool = True,
        default: Optional[int] = None,
    ) -> "CovarianceView":
        """Sub-block of Ĉ_β at θ_{i, coordinates[i]} for every player in the layout."""
        ids, idx = [], []
        for seg in layout.segments:
            k = coordinates.get(seg.player_id, default)
            if k is None:
                raise ConfigError(f"No covariance coordinate configured for player {seg.player_id}")
            width = seg.theta.stop - seg.theta.start
            if not 0 <= k < width:
                raise ConfigError(f"Coordinate {k} is out of range for player {seg.player_id}")
            ids.append(seg.player_id)
            idx.append(seg.theta.start + k)
        C = np.asarray(covariance, dtype=float)
        return cls(C[np.ix_(idx, idx)], tuple(ids), normalize)

    def index_of(self, player_id: int) -> int:
        try:
            return self.player_ids.index(player_id)
        except ValueError:
            raise ConfigError(f"Player {player_id} is not in the covariance view") from None

    @property
    def weights(self) -> np.ndarray:
        """σ_ij, divided by σ_ii row-wise when normalizing."""
        if not self.normalize:
            return self.sigma.copy()
        return self.sigma / np.diag(self.sigma)[:, None]

    @property
    def correlation(self) -> np.ndarray:
        d = np.sqrt(np.diag(self.sigma))
        return self.sigma / np.outer(d, d)


@dataclass(frozen=True)
class Coalition:
    player_id: int
    members: Tuple[int, ...]
    signs: Tuple[float, ...]
    weights: Tuple[float, ...]
    scalings: Tuple[float, ...] = ()
    mixing: Tuple[float, ...] = ()

    def __post_init__(self):
        n = len(self.members)
        if self.player_id not in self.members:
            raise ConfigError(f"Coalition of player {self.player_id} must contain the player")
        if not self.scalings:
            object.__setattr__(self, "scalings", (1.0,) * n)
        if not self.mixing:
            object.__setattr__(self, "mixing", tuple(self.weights))
        if not (len(self.signs) == len(self.weights) == len(self.scalings) == len(self.mixing) == n):
            raise DimensionError(f"Coalition of player {self.player_id} has mismatched lengths")
        if any(c <= 0 for c in self.scalings):
            raise ConfigError(f"Scalings of player {self.player_id} must be positive")

    @property
    def term_weights(self) -> np.ndarray:
        """α_ij / c_ij for every member."""
        return np.array(self.mixing) / np.array(self.scalings)


@dataclass(frozen=True)
class CoalitionSpec:
    coalitions: Tuple[Coalition, ...]

    def get(self, player_id: int) -> Coalition:
        for c in self.coalitions:
            if c.player_id == player_id:
                return c
        raise ConfigError(f"No coalition for player {player_id}")

    @property
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        """Every (i, j) with j in 𝒦_i, in coalition order."""
        return tuple((c.player_id, j) for c in self.coalitions for j in c.members)

    def with_scalings(self, scalings: Mapping[Tuple[int, int], float]) -> "CoalitionSpec":
        out = []
        for c in self.coalitions:
            cs = tuple(float(scalings.get((c.player_id, j), old)) for j, old in zip(c.members, c.scalings))
            out.append(replace(c, scalings=cs))
        return CoalitionSpec(tuple(out))

    @property
    def is_identity(self) -> bool:
        return all(c.members == (c.player_id,) for c in self.coalitions)

    def to_dict(self) -> dict:
        return {
            str(c.player_id): {
                "members": list(c.members),
                "signs": list(c.signs),
                "weights": list(c.weights),
                "scalings": list(c.scalings),
                "mixing": list(c.mixing),
            }
            for c in self.coalitions
        }


def select_coalitions(cov: CovarianceView, threshold: float, sign_rule: SignRule = SignRule.SIGN) -> CoalitionSpec:
    """𝒦_i = {i} ∪ {j : |corr_ij| ≥ threshold}; z_ij = sign(σ_ij), z_ii = +1."""
    if not 0 < threshold < 1:
        raise ConfigError(f"Coalition threshold must lie in (0, 1), got {threshold}")
    sign_rule = SignRule(sign_rule)
    corr = np.abs(cov.correlation)
    W = cov.weights
    coalitions = []
    for a, pid in enumerate(cov.player_ids):
        members, signs, weights = [], [], []
        for b, other in enumerate(cov.player_ids):
            if a != b and corr[a, b] < threshold:
                continue
            members.append(other)
            if a == b or sign_rule is SignRule.POSITIVE:
                signs.append(1.0)
            else:
                signs.append(-1.0 if cov.sigma[a, b] < 0 else 1.0)
            weights.append(float(W[a, b]))
        coalitions.append(Coalition(pid, tuple(members), tuple(signs), tuple(weights)))
    spec = CoalitionSpec(tuple(coalitions))
    logger.debug(f"Coalitions at threshold {threshold}: {spec.pairs}")
    return spec


def identity_coalitions(player_ids: Sequence[int]) -> CoalitionSpec:
    return CoalitionSpec(tuple(Coalition(pid, (pid,), (1.0,), (1.0,)) for pid in player_ids))


def build_correlated_utility(
    base: GameSpec,
    estimates: Mapping[int, np.ndarray],
    coalition: CoalitionSpec,
    player_id: int,
) -> UtilitySpec:
    """ĝ_i on player i's basis and known part, mixing the coalition's θ̂_j."""
    own = base.player(player_id).utility
    c = coalition.get(player_id)
    w = c.term_weights
    theta = np.zeros(own.m)
    for j, w_j in zip(c.members, w):
        if j not in base.player_ids:
            raise ConfigError(f"Coalition member {j} is not a player of the game")
        if j not in estimates:
            raise ConfigError(f"No estimate available for coalition member {j}")
        theta_j = np.asarray(estimates[j], dtype=float)
        if theta_j.shape != (own.m,):
            raise DimensionError(
                f"Player {j}'s estimate has {theta_j.size} weights; player {player_id}'s basis has {own.m}"
            )
        theta += w_j * theta_j
    psi_weight = float(np.dot(w, c.signs))
    return replace(own, theta=theta, known_scale=own.known_scale * psi_weight)


def build_correlated_game(base: GameSpec, estimates: Mapping[int, np.ndarray], coalition: CoalitionSpec) -> GameSpec:
    return base.with_utilities(
        {
            pid: build_correlated_utility(base, estimates, coalition, pid)
            for pid in base.player_ids
            if any(c.player_id == pid for c in coalition.coalitions)
        }
    )
