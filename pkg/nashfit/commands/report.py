from __future__ import annotations

import argparse
import io

import numpy as np
import pandas as pd

from ..config import RunConfig, build_config
from ..console import get_progress, log, print_rule
from ..ensemble.learners import bagging, bumping
from ..estimation.observations import FLOAT_FORMAT, ObservationSet
from ..estimation.system import assemble_system
from ..forecast.metrics import bias_variance
from ..game.nash import utility_surface
from ..game.schema import load_game
from ..game.spec import GameSpec
from ..serializer import atomic_write_group, json_text, versioned
from .estimate import boost, bootstrap_members, fit_reference
from .helpers import describe_layout, load_observations


def _csv_text(frame: pd.DataFrame) -> str:
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def surface_table(game: GameSpec, obs: ObservationSet, points: int) -> pd.DataFrame:
    """Utility of every estimated player over the observed action range."""
    all_actions = np.concatenate([obs.player_series(pid) for pid in obs.player_ids])
    mean_points = np.linspace(all_actions.min(), all_actions.max(), points)
    frames = []
    for i, pid in enumerate(game.player_ids):
        series = obs.player_series(pid)
        if len(series) == 0 or not game.players[i].utility.has_theta:
            continue
        own_points = np.linspace(series.min(), series.max(), points)
        frames.append(utility_surface(game, i, own_points, mean_points))
    return pd.concat(frames, ignore_index=True)


def cmd_report(args: argparse.Namespace) -> int:
    config: RunConfig = build_config(args, "report")
    config.require("game", "obs")
    game = load_game(config.game)
    obs = load_observations(config.obs, game)
    if config.average > 1:
        obs = obs.aggregate(config.average)
    system = assemble_system(game, obs)
    print_rule(f"Bias-variance report ({config.replicates} replicates)")

    progress = get_progress()
    progress.start()
    task = progress.add_task("Refitting bootstrap members...", total=config.replicates)
    try:
        reference = fit_reference(system, config)
        members = bootstrap_members(system, reference, config, on_member=lambda _: progress.advance(task))
    finally:
        progress.stop()

    ensembles = {
        "bagging": bagging(members, system),
        "bumping": bumping(system, [reference.beta_hat] + members),
        "boosting": boost(system, reference, config),
    }
    report = bias_variance(members, {name: out.beta_hat for name, out in ensembles.items()}, reference.beta_hat)

    files = {config.output("bias_variance.csv"): _csv_text(report.to_frame(system.layout))}
    summary = {
        "labels": list(system.layout.labels),
        "layout": describe_layout(system.layout),
        "replicates": config.replicates,
        "seed": config.seed,
        "cfgls": reference.to_dict(),
    }
    for name, out in ensembles.items():
        summary[name] = out.to_result(system, reference.noise).to_dict()
    files[config.output("summary.json")] = json_text(versioned(summary))

    if config.surface:
        estimated = game.with_thetas(ensembles["bagging"].to_result(system).thetas)
        files[config.output("surface.csv")] = _csv_text(surface_table(estimated, obs, config.surface_points))

    atomic_write_group(files)
    if config.surface:
        log(f"Wrote utility surface to {config.output('surface.csv')}", style="dim")
    log(f"Wrote bias-variance table to {config.output('bias_variance.csv')}", style="success")
    return 0
