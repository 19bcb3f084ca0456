"""Equilibrium computation and verification for concave games with box constraints.

Player positions (``i``) are indices into ``GameSpec.players``; joint actions are
length-``p`` vectors in the same order. Multipliers are one vector per player,
aligned with that player's ``ConstraintSet.constraints``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import optimize

from ..exceptions import DimensionError, DomainError, NumericalError
from .spec import ACTIVE_TOL, ConstraintSet, GameSpec

logger = logging.getLogger("Nashfit.game")

DEFAULT_STEP = 0.05
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100_000


@dataclass
class EquilibriumReport:
    point: np.ndarray
    multipliers: List[np.ndarray]
    omega_norm: float
    iterations: int
    converged: bool
    second_order_ok: List[bool]
    player_ids: tuple = ()

    def to_dict(self) -> dict:
        return {
            "player_ids": list(self.player_ids),
            "point": self.point,
            "multipliers": [list(m) for m in self.multipliers],
            "omega_norm": self.omega_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "second_order_ok": list(self.second_order_ok),
        }


@dataclass
class DifferentialNashCheck:
    first_order_ok: bool
    second_order_ok: List[bool]
    omega: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.first_order_ok and all(self.second_order_ok)


@dataclass
class EpsilonNashCheck:
    gaps: np.ndarray
    eps: float

    @property
    def per_player(self) -> List[bool]:
        return [bool(g <= self.eps) for g in self.gaps]

    @property
    def ok(self) -> bool:
        return all(self.per_player)


def _joint(game: GameSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != game.p:
        raise DimensionError(f"Joint action has {len(x)} components, game has {game.p} players")
    return x


def evaluate_utility(game: GameSpec, i: int, x) -> float:
    """f_i(x) = <φ_i(x), θ_i> + f̄_i(x)."""
    x = _joint(game, x)
    return game.players[i].utility.value(x[i], game.others(x, i))


def own_gradients(game: GameSpec, x) -> np.ndarray:
    """Stacked D_i f_i(x) for every player."""
    x = _joint(game, x)
    grads = np.array(
        [pl.utility.grad(x[i], game.others(x, i)) for i, pl in enumerate(game.players)]
    )
    if not np.all(np.isfinite(grads)):
        raise NumericalError(f"Non-finite utility gradient at x={x.tolist()}")
    return grads


def _check_multipliers(game: GameSpec, mu) -> List[np.ndarray]:
    if mu is None:
        return [np.zeros(pl.constraints.count) for pl in game.players]
    if len(mu) != game.p:
        raise DimensionError(f"Expected multipliers for {game.p} players, got {len(mu)}")
    out = []
    for pl, mu_i in zip(game.players, mu):
        mu_i = np.asarray(mu_i, dtype=float).reshape(-1)
        if len(mu_i) != pl.constraints.count:
            raise DimensionError(
                f"Player {pl.player_id} has {pl.constraints.count} constraint(s) "
                f"but {len(mu_i)} multiplier(s) were given"
            )
        out.append(mu_i)
    return out


def differential_game_form(game: GameSpec, x, mu=None) -> np.ndarray:
    """ω(x, μ): D_i L_i with only the constraints active at x_i contributing."""
    x = _joint(game, x)
    mu = _check_multipliers(game, mu)
    omega = own_gradients(game, x)
    for i, pl in enumerate(game.players):
        cs = pl.constraints
        if cs.count == 0:
            continue
        active = cs.active(x[i])
        omega[i] += float(np.sum(mu[i][active] * cs.gradients(x[i])[active]))
    return omega


def project(cs: ConstraintSet, x_i: float) -> float:
    return cs.project(x_i)


def recover_multipliers(game: GameSpec, x, grads: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """KKT stationarity at binding bounds: μ_ij = max(0, -D_i f_i / D_i h_ij)."""
    x = _joint(game, x)
    grads = own_gradients(game, x) if grads is None else grads
    out = []
    for i, pl in enumerate(game.players):
        cs = pl.constraints
        mu_i = np.zeros(cs.count)
        active = cs.active(x[i])
        dh = cs.gradients(x[i])
        for j in range(cs.count):
            if active[j]:
                mu_i[j] = max(0.0, -grads[i] / dh[j])
        out.append(mu_i)
    return out


def _second_order(game: GameSpec, x: np.ndarray, mu: List[np.ndarray]) -> List[bool]:
    flags = []
    for i, pl in enumerate(game.players):
        cs = pl.constraints
        if cs.count and np.any(cs.active(x[i]) & (mu[i] > 0)):
            # tangent space collapses to {0}
            flags.append(True)
            continue
        flags.append(pl.utility.d2(x[i], game.others(x, i)) < 0)
    return flags


def check_differential_nash(game: GameSpec, x, mu=None, eps: float = 0.0) -> DifferentialNashCheck:
    x = _joint(game, x)
    mu = _check_multipliers(game, mu)
    omega = differential_game_form(game, x, mu)
    return DifferentialNashCheck(
        first_order_ok=bool(np.linalg.norm(omega) <= eps),
        second_order_ok=_second_order(game, x, mu),
        omega=omega,
    )


def solve_nash(
    game: GameSpec,
    x0=None,
    step: float = DEFAULT_STEP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EquilibriumReport:
    """Simultaneous projected gradient ascent on every player's utility."""
    if step <= 0 or tol <= 0:
        raise DomainError("step and tol must be positive")
    x = game.midpoint() if x0 is None else _joint(game, x0).copy()
    if not game.contains(x):
        raise DomainError(f"Start point {x.tolist()} lies outside the constraint sets")

    lower, upper = game.lower, game.upper
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grads = own_gradients(game, x)
        x_new = np.clip(x + step * grads, lower, upper)
        delta = np.linalg.norm(x_new - x) / step
        x = x_new
        if delta <= tol:
            converged = True
            break

    grads = own_gradients(game, x)
    mu = recover_multipliers(game, x, grads)
    omega = differential_game_form(game, x, mu)
    if not converged:
        logger.debug(f"Projected gradient stopped after {iterations} iterations without converging")
    return EquilibriumReport(
        point=x,
        multipliers=mu,
        omega_norm=float(np.linalg.norm(omega)),
        iterations=iterations,
        converged=converged,
        second_order_ok=_second_order(game, x, mu),
        player_ids=game.player_ids,
    )


def best_response_gap(game: GameSpec, i: int, x) -> float:
    """max over x_i' in 𝒞_i of f_i(x_i', x_-i) - f_i(x)."""
    x = _joint(game, x)
    pl = game.players[i]
    others = game.others(x, i)
    current = pl.utility.value(x[i], others)
    lo, hi = pl.constraints.lower, pl.constraints.upper

    def negative(v):
        return -pl.utility.value(float(v), others)

    candidates = [x[i]] + [b for b in (lo, hi) if math.isfinite(b)]
    if math.isfinite(lo) and math.isfinite(hi):
        if hi > lo:
            res = optimize.minimize_scalar(
                negative, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
            )
            candidates.append(float(res.x))
    else:
        res = optimize.minimize_scalar(negative, bracket=(x[i] - 1.0, x[i] + 1.0))
        candidates.append(pl.constraints.project(float(res.x)))

    best = max(pl.utility.value(c, others) for c in candidates)
    return max(0.0, best - current)


def check_epsilon_nash(game: GameSpec, x, eps: float) -> EpsilonNashCheck:
    gaps = np.array([best_response_gap(game, i, x) for i in range(game.p)])
    return EpsilonNashCheck(gaps=gaps, eps=eps)


def omega_jacobian(game: GameSpec, x) -> np.ndarray:
    """Dω: own second derivatives on the diagonal, cross terms elsewhere."""
    x = _joint(game, x)
    J = np.zeros((game.p, game.p))
    for i, pl in enumerate(game.players):
        others = game.others(x, i)
        J[i, i] = pl.utility.d2(x[i], others)
        cols = [j for j in range(game.p) if j != i]
        J[i, cols] = pl.utility.cross(x[i], others)
    return J


def is_isolated(game: GameSpec, x) -> bool:
    """Invertible Dω at x (the equilibrium is locally unique)."""
    J = omega_jacobian(game, x)
    return int(np.linalg.matrix_rank(J)) == game.p


def utility_surface(game: GameSpec, i: int, own_points: Sequence[float], mean_points: Sequence[float]) -> pd.DataFrame:
    """f_i on a grid of (x_i, mean of opponents) with every opponent set to the mean."""
    pl = game.players[i]
    n_others = game.p - 1
    if n_others == 0:
        mean_points = [0.0]
    rows = []
    for m in mean_points:
        others = np.full(n_others, float(m))
        for own in own_points:
            rows.append(
                {
                    "player_id": pl.player_id,
                    "x_i": float(own),
                    "mean_others": float(m),
                    "utility": pl.utility.value(float(own), others),
                }
            )
    return pd.DataFrame(rows, columns=["player_id", "x_i", "mean_others", "utility"])
