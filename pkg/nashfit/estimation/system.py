"""Stacked KKT-residual regression system.

For player ``i`` and observation ``k`` the block ``X_i^(k)`` has ``ℓ_i + 1`` rows::

    [ D_i h_i(x_i)      D_i φ_i(x) ]     Y = [ -D_i f̄_i(x) ]
    [ diag(h_i(x_i))    0          ]         [ 0           ]

so that ``Y - Xβ`` stacks ``(-r_s, -r_c)``: the stationarity residual and the
complementary-slackness residuals. Blocks are laid out player by player, each
player's observations in record order; β holds ``(μ_i, θ_i)`` per player.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Tuple

import numpy as np

from ..exceptions import DimensionError, EstimationError, InfeasibleError, NumericalError
from ..game.spec import GameSpec
from .observations import ObservationSet

logger = logging.getLogger("Nashfit.estimation")


@dataclass(frozen=True)
class PlayerSegment:
    player_id: int
    mu: slice
    theta: slice
    n_obs: int
    block_size: int


@dataclass(frozen=True)
class CoefficientLayout:
    segments: Tuple[PlayerSegment, ...]
    labels: Tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def player_ids(self) -> Tuple[int, ...]:
        return tuple(s.player_id for s in self.segments)

    def segment(self, player_id: int) -> PlayerSegment:
        for s in self.segments:
            if s.player_id == player_id:
                return s
        raise EstimationError(f"Player {player_id} is not part of the regression system")

    def theta_of(self, beta: np.ndarray, player_id: int) -> np.ndarray:
        return np.asarray(beta)[self.segment(player_id).theta]

    def mu_of(self, beta: np.ndarray, player_id: int) -> np.ndarray:
        return np.asarray(beta)[self.segment(player_id).mu]

    def thetas(self, beta: np.ndarray) -> Dict[int, np.ndarray]:
        return {s.player_id: np.asarray(beta)[s.theta].copy() for s in self.segments}

    @property
    def mu_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for s in self.segments:
            mask[s.mu] = True
        return mask

    def labeled(self, beta: np.ndarray) -> Dict[str, float]:
        return {label: float(v) for label, v in zip(self.labels, beta)}


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Box 𝓑 on β: μ ≥ 0 plus Θ_i bounds; equal bounds fix a coefficient."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.lower.shape != self.upper.shape:
            raise DimensionError("Feasible-set bounds differ in length")
        if np.any(self.lower > self.upper):
            raise InfeasibleError("Coefficient feasible set is empty")

    @property
    def fixed_mask(self) -> np.ndarray:
        return self.lower == self.upper

    @property
    def free_mask(self) -> np.ndarray:
        return ~self.fixed_mask

    def project(self, beta: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(beta, dtype=float), self.lower, self.upper)

    def contains(self, beta: np.ndarray, tol: float = 1e-10) -> bool:
        beta = np.asarray(beta, dtype=float)
        fixed = self.fixed_mask
        return bool(
            np.all(beta >= self.lower - tol)
            and np.all(beta <= self.upper + tol)
            and np.all(beta[fixed] == self.lower[fixed])
        )


@dataclass(frozen=True, eq=False)
class RegressionSystem:
    X: np.ndarray
    Y: np.ndarray
    layout: CoefficientLayout
    feasible: FeasibleSet
    row_player: np.ndarray
    row_obs: np.ndarray
    row_slot: np.ndarray
    whitened: bool = False

    def __post_init__(self):
        n_d, k = self.X.shape
        if self.Y.shape != (n_d,) or k != self.layout.size or self.feasible.lower.shape != (k,):
            raise DimensionError(
                f"Inconsistent system: X {self.X.shape}, Y {self.Y.shape}, "
                f"{self.layout.size} coefficients"
            )
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.Y)):
            raise NumericalError("Regression system contains non-finite entries")

    @property
    def n_d(self) -> int:
        return self.X.shape[0]

    @property
    def obs_ids(self) -> np.ndarray:
        return np.unique(self.row_obs)

    def residuals(self, beta: np.ndarray) -> np.ndarray:
        return self.Y - self.X @ beta

    def with_response(self, Y: np.ndarray) -> "RegressionSystem":
        return replace(self, Y=np.asarray(Y, dtype=float))

    def subset_rows(self, mask: np.ndarray) -> "RegressionSystem":
        return replace(
            self,
            X=self.X[mask],
            Y=self.Y[mask],
            row_player=self.row_player[mask],
            row_obs=self.row_obs[mask],
            row_slot=self.row_slot[mask],
        )

    def free_design(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(X over free columns, Y with fixed contributions moved over, fixed values)."""
        fixed = self.feasible.fixed_mask
        values = self.feasible.lower[fixed]
        Y = self.Y - self.X[:, fixed] @ values if np.any(fixed) else self.Y
        return self.X[:, ~fixed], Y, values

    def row_blocks(self, player_id: int) -> np.ndarray:
        """Row indices of a player's per-observation blocks, shape (n_i, ℓ_i + 1)."""
        seg = self.layout.segment(player_id)
        rows = np.flatnonzero(self.row_player == player_id)
        if len(rows) % seg.block_size:
            raise DimensionError(f"Rows of player {player_id} do not form whole blocks")
        return rows.reshape(-1, seg.block_size)


def _labels(game: GameSpec, player_id: int) -> List[str]:
    pl = game.player(player_id)
    out = [f"player_{player_id}.mu_{j}_{c.kind.value}" for j, c in enumerate(pl.constraints.constraints)]
    out += [f"player_{player_id}.theta_{k}_{b.kind.value}" for k, b in enumerate(pl.utility.basis)]
    return out


def assemble_system(game: GameSpec, obs: ObservationSet) -> RegressionSystem:
    """Builds the block-diagonal (X, Y) system and the feasible set 𝓑."""
    if len(obs) == 0:
        raise EstimationError("Cannot assemble a regression system from zero observations")
    obs.validate(game)

    included = []
    for pl in game.players:
        if obs.count(pl.player_id) == 0:
            logger.warning(f"Player {pl.player_id} has no observations and is dropped from the system")
            continue
        included.append(pl)

    segments, labels, lower, upper = [], [], [], []
    col = 0
    for pl in included:
        ell, m = pl.constraints.count, pl.utility.m
        segments.append(
            PlayerSegment(
                player_id=pl.player_id,
                mu=slice(col, col + ell),
                theta=slice(col + ell, col + ell + m),
                n_obs=obs.count(pl.player_id),
                block_size=ell + 1,
            )
        )
        col += ell + m
        labels += _labels(game, pl.player_id)
        lower += [0.0] * ell + list(pl.utility.theta_lower)
        upper += [np.inf] * ell + list(pl.utility.theta_upper)
    layout = CoefficientLayout(tuple(segments), tuple(labels))

    n_d = sum((s.block_size) * s.n_obs for s in segments)
    X = np.zeros((n_d, layout.size))
    Y = np.zeros(n_d)
    row_player = np.zeros(n_d, dtype=int)
    row_obs = np.zeros(n_d, dtype=int)
    row_slot = np.zeros(n_d, dtype=int)

    r = 0
    for seg in segments:
        pid = seg.player_id
        ell = seg.block_size - 1
        for rec in obs:
            if pid not in rec.actions:
                continue
            context = rec.context(game)
            i = context.index_of(pid)
            pl = context.players[i]
            x = rec.action_vector(context)
            own, others = x[i], context.others(x, i)
            cs, u = pl.constraints, pl.utility

            X[r, seg.mu] = cs.gradients(own)
            X[r, seg.theta] = u.d_features(own, others)
            Y[r] = -u.known_grad(own, others)
            if ell:
                X[r + 1 : r + 1 + ell, seg.mu] = np.diag(cs.values(own))
            rows = slice(r, r + ell + 1)
            row_player[rows] = pid
            row_obs[rows] = rec.obs_id
            row_slot[rows] = np.arange(ell + 1)
            r += ell + 1

    return RegressionSystem(
        X=X,
        Y=Y,
        layout=layout,
        feasible=FeasibleSet(np.array(lower, dtype=float), np.array(upper, dtype=float)),
        row_player=row_player,
        row_obs=row_obs,
        row_slot=row_slot,
    )


def stacked_residuals(game: GameSpec, obs: ObservationSet, system: RegressionSystem, beta: np.ndarray) -> float:
    """Σ_i Σ_k ‖r_s‖² + ‖r_c‖² computed directly from the KKT conditions."""
    total = 0.0
    for seg in system.layout.segments:
        pid = seg.player_id
        mu = system.layout.mu_of(beta, pid)
        theta = system.layout.theta_of(beta, pid)
        for rec in obs:
            if pid not in rec.actions:
                continue
            context = rec.context(game)
            i = context.index_of(pid)
            pl = context.players[i]
            x = rec.action_vector(context)
            own, others = x[i], context.others(x, i)
            u = pl.utility.with_theta(theta)
            r_s = u.grad(own, others) + float(mu @ pl.constraints.gradients(own))
            r_c = mu * pl.constraints.values(own)
            total += r_s**2 + float(r_c @ r_c)
    return total
