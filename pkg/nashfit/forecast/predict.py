"""Forecasts of held-out play: one Nash computation per test context."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Optional

import numpy as np

from ..estimation.observations import Observation, ObservationSet
from ..game.nash import DEFAULT_MAX_ITER, DEFAULT_STEP, DEFAULT_TOL, solve_nash
from ..game.spec import GameSpec

logger = logging.getLogger("Nashfit.forecast")


@dataclass(frozen=True)
class SolverParams:
    step: float = DEFAULT_STEP
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER


@dataclass(frozen=True)
class Prediction:
    obs_id: int
    player_ids: tuple
    point: np.ndarray
    converged: bool
    iterations: int

    def as_dict(self) -> dict:
        return {pid: float(v) for pid, v in zip(self.player_ids, self.point)}


def predict_one(
    game: GameSpec,
    record: Observation,
    params: SolverParams = SolverParams(),
    warm_start: Optional[Mapping[int, float]] = None,
) -> Prediction:
    """Equilibrium of the game restricted to the record's participants under its incentives."""
    context = record.context(game)
    x0 = context.midpoint()
    if warm_start:
        guess = np.array([warm_start.get(pid, v) for pid, v in zip(context.player_ids, x0)])
        x0 = context.project(guess)
    report = solve_nash(context, x0, step=params.step, tol=params.tol, max_iter=params.max_iter)
    return Prediction(
        obs_id=record.obs_id,
        player_ids=context.player_ids,
        point=report.point,
        converged=report.converged,
        iterations=report.iterations,
    )


def forecast(
    game: GameSpec,
    test: ObservationSet,
    params: SolverParams = SolverParams(),
    warm_start: Optional[Mapping[int, float]] = None,
    max_workers: Optional[int] = None,
) -> List[Prediction]:
    def run(record: Observation) -> Prediction:
        return predict_one(game, record, params, warm_start)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            predictions = list(pool.map(run, test.records))
    else:
        predictions = [run(r) for r in test.records]

    failed = sum(1 for p in predictions if not p.converged)
    if failed:
        logger.warning(f"{failed} of {len(predictions)} forecasts did not converge and are excluded from scoring")
    return predictions
