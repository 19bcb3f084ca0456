from __future__ import annotations

import argparse
import io
import json

import numpy as np

from ..config import build_config
from ..console import console, get_progress, log, print_rule
from ..correlated.coalitions import CovarianceView, select_coalitions
from ..correlated.grid import ScalingGrid, grid_search_scalings
from ..estimation.observations import FLOAT_FORMAT
from ..exceptions import ConfigError, InputError
from ..game.schema import dump_game, load_game
from ..serializer import atomic_write_group, json_text, versioned
from .helpers import layout_from_report, load_observations, read_report, solver_params, thetas_from_report


def parse_grid_option(value) -> ScalingGrid:
    """``--grid`` as JSON (object or list) or a plain value list/range applied to every pair."""
    if value is None:
        return ScalingGrid({})
    if isinstance(value, str) and value.strip()[:1] in ("{", "["):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as e:
            raise ConfigError(f"--grid is not valid JSON: {e}") from e
    return ScalingGrid.parse(value)


def cmd_correlate(args: argparse.Namespace) -> int:
    config = build_config(args, "correlate")
    config.require("game", "estimate", "test")
    report = read_report(config.estimate)
    covariance = report.get("diagnostics", {}).get("covariance")
    if covariance is None:
        raise InputError(f"{config.estimate} carries no covariance; run 'estimate --method bagging' first")

    game = load_game(config.game)
    layout = layout_from_report(report)
    estimates = thetas_from_report(report)
    eval_obs = load_observations(config.test, game)
    grid = parse_grid_option(config.grid)

    view = CovarianceView.from_covariance(np.asarray(covariance, dtype=float), layout, {}, default=config.coordinate)
    coalitions = select_coalitions(view, config.threshold, config.sign_rule)
    cells = grid.size(coalitions)
    print_rule(f"Correlated game search ({cells} cells)")
    for c in coalitions.coalitions:
        console.print(f"  [info]player {c.player_id}[/info]: coalition {list(c.members)}")

    progress = get_progress()
    progress.start()
    task = progress.add_task("Solving grid cells...", total=cells)
    try:
        result = grid_search_scalings(
            game,
            estimates,
            coalitions,
            grid,
            eval_obs,
            solver_params(config),
            max_workers=config.max_workers,
            on_cell=lambda _: progress.advance(task),
        )
    finally:
        progress.stop()

    buf = io.StringIO()
    result.table.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    summary = json_text(
        versioned(
            {
                "threshold": config.threshold,
                "sign_rule": config.sign_rule.value,
                "coordinate": config.coordinate,
                "best_index": result.best_index,
                "best_c": {f"{i},{j}": c for (i, j), c in result.best_c.items()},
                "best_rmse": result.table.loc[result.best_index, "rmse"],
                "coalitions": result.coalition.to_dict(),
            }
        )
    )
    atomic_write_group(
        {
            config.output("grid.csv"): buf.getvalue(),
            config.output("correlated_game.json"): dump_game(result.best_game),
            config.output("coalitions.json"): summary,
        }
    )
    log(
        f"Best cell {result.best_index} (rmse {result.table.loc[result.best_index, 'rmse']:.6g}); "
        f"wrote {config.output('grid.csv')}",
        style="success",
    )
    return 0
