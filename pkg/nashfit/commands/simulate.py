from __future__ import annotations

import argparse
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config import build_config
from ..console import get_progress, log, print_rule
from ..estimation.observations import Observation, ObservationSet
from ..exceptions import ConfigError, SimulationError
from ..forecast.predict import SolverParams
from ..game.nash import solve_nash
from ..game.schema import dump_game, load_game
from ..game.spec import GameSpec
from ..serializer import atomic_write_group
from .helpers import solver_params


def draw_participants(game: GameSpec, participation: float, rng: np.random.Generator) -> Tuple[int, ...]:
    """Each player joins with probability ``participation``; at least one always plays."""
    if participation >= 1.0:
        return game.player_ids
    joined = rng.random(game.p) < participation
    if not joined.any():
        joined[rng.integers(game.p)] = True
    return tuple(pid for pid, j in zip(game.player_ids, joined) if j)


def draw_incentives(game: GameSpec, participants, rng: np.random.Generator) -> Dict[int, Tuple[float, ...]]:
    """Uniform weights from each incentive term's range; terms without a range keep their weight."""
    incentives = {}
    for pid in participants:
        utility = game.player(pid).utility
        weights = []
        for k in utility.incentive_indices:
            term = utility.known_part[k]
            if term.weight_range is None:
                weights.append(term.weight)
            else:
                lo, hi = term.weight_range
                weights.append(float(rng.uniform(lo, hi)))
        if weights:
            incentives[pid] = tuple(weights)
    return incentives


def simulate_observations(
    game: GameSpec,
    n: int,
    seed: int,
    sigma_obs: float = 0.0,
    participation: float = 1.0,
    params: SolverParams = SolverParams(),
    on_record: Optional[Callable[[int], None]] = None,
) -> ObservationSet:
    """Noisy equilibria of ``n`` incentive-varied game instances, clamped to 𝒞."""
    missing = [pl.player_id for pl in game.players if not pl.utility.has_theta]
    if missing:
        raise ConfigError(f"Simulation needs every utility weight; player(s) {missing} have none")
    rng = np.random.default_rng(seed)
    records: List[Observation] = []
    for k in range(n):
        participants = draw_participants(game, participation, rng)
        incentives = draw_incentives(game, participants, rng)
        context = game.restrict(participants).with_incentives(incentives)
        eq = solve_nash(context, context.midpoint(), step=params.step, tol=params.tol, max_iter=params.max_iter)
        if not eq.converged:
            instance = {
                "obs_id": k,
                "participants": list(participants),
                "incentives": {str(pid): list(w) for pid, w in incentives.items()},
                "iterations": eq.iterations,
            }
            raise SimulationError(f"Equilibrium solver did not converge on instance {instance}", instance=instance)
        x = eq.point
        if sigma_obs > 0:
            x = context.project(x + sigma_obs * rng.standard_normal(len(x)))
        records.append(Observation(k, {pid: float(v) for pid, v in zip(context.player_ids, x)}, incentives))
        if on_record:
            on_record(k)
    return ObservationSet(tuple(records))


def cmd_simulate(args: argparse.Namespace) -> int:
    config = build_config(args, "simulate")
    config.require("game")
    game = load_game(config.game)
    print_rule(f"Simulating {config.n} observations")

    progress = get_progress()
    progress.start()
    task = progress.add_task("Solving game instances...", total=config.n)
    try:
        obs = simulate_observations(
            game,
            config.n,
            config.seed,
            sigma_obs=config.sigma_obs,
            participation=config.participation,
            params=solver_params(config),
            on_record=lambda _: progress.advance(task),
        )
    finally:
        progress.stop()

    train, test = obs.split(config.holdout)
    files = {config.output("observations.csv"): train.to_csv_text()}
    if config.holdout:
        files[config.output("test.csv")] = test.to_csv_text()
    files[config.output("game.json")] = dump_game(game)
    atomic_write_group(files)

    log(f"Wrote {len(train)} training and {len(test)} test observations to {config.out}", style="success")
    return 0
