from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..config import RunConfig
from ..estimation.observations import ObservationSet
from ..estimation.solvers import EstimatorResult
from ..estimation.system import CoefficientLayout, PlayerSegment
from ..exceptions import ConfigError, InputError
from ..forecast.predict import SolverParams
from ..game.schema import load_game
from ..game.spec import GameSpec
from ..serializer import FORMAT_VERSION, versioned


def solver_params(config: RunConfig) -> SolverParams:
    return SolverParams(step=config.step, tol=config.tol, max_iter=config.max_iter)


def read_report(path) -> dict:
    """Loads a JSON report written by an earlier command."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Report not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"Report {path} is not valid JSON: {e}") from e
    if data.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"Report {path} has unsupported format_version {data.get('format_version')}")
    return data


def thetas_from_report(report: dict) -> Dict[int, np.ndarray]:
    try:
        return {int(pid): np.asarray(v, dtype=float) for pid, v in report["thetas"].items()}
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Estimate report has no usable 'thetas': {e}") from e


def describe_layout(layout: CoefficientLayout) -> list:
    return [
        {
            "player_id": s.player_id,
            "mu": [s.mu.start, s.mu.stop],
            "theta": [s.theta.start, s.theta.stop],
            "n_obs": s.n_obs,
            "block_size": s.block_size,
        }
        for s in layout.segments
    ]


def layout_from_report(report: dict) -> CoefficientLayout:
    try:
        segments = tuple(
            PlayerSegment(
                player_id=int(s["player_id"]),
                mu=slice(*s["mu"]),
                theta=slice(*s["theta"]),
                n_obs=int(s.get("n_obs", 0)),
                block_size=int(s.get("block_size", 0)),
            )
            for s in report["layout"]
        )
        return CoefficientLayout(segments, tuple(report["labels"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Estimate report has no usable coefficient layout: {e}") from e


def estimate_payload(result: EstimatorResult, config: RunConfig, **extra) -> dict:
    payload = result.to_dict()
    payload["layout"] = describe_layout(result.layout)
    payload["config"] = {
        "method": config.method,
        "noise": config.noise.value,
        "seed": config.seed,
        "replicates": config.replicates,
        "nu": config.nu,
        "mmax": config.mmax,
        "cv_folds": config.cv_folds,
        "average": config.average,
    }
    payload.update(extra)
    return versioned(payload)


def load_estimated_game(config: RunConfig) -> GameSpec:
    """The game file, with θ replaced by ``--estimate`` when one is given."""
    game = load_game(config.game)
    if config.estimate is not None:
        game = game.with_thetas(thetas_from_report(read_report(config.estimate)))
    missing = [pl.player_id for pl in game.players if not pl.utility.has_theta]
    if missing:
        raise ConfigError(f"Player(s) {missing} have no utility weights; pass --estimate or a full game file")
    return game


def load_observations(path: Optional[Path], game: Optional[GameSpec] = None) -> ObservationSet:
    obs = ObservationSet.read_csv(path)
    if game is not None:
        obs.validate(game)
    return obs
