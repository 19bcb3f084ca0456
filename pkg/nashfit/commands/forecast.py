from __future__ import annotations

import argparse
import io
from typing import List

import pandas as pd

from ..config import build_config
from ..console import console, get_progress, log, print_rule
from ..estimation.observations import FLOAT_FORMAT, ObservationSet
from ..forecast.metrics import constant_mean_forecast, naive_last_forecast, paired_errors, score, score_forecast
from ..forecast.predict import Prediction, forecast
from ..serializer import atomic_write_group, json_text, versioned
from .helpers import load_estimated_game, load_observations, solver_params


def predictions_frame(predictions: List[Prediction], test: ObservationSet) -> pd.DataFrame:
    actual = {r.obs_id: r.actions for r in test.records}
    rows = []
    for p in predictions:
        for pid, v in zip(p.player_ids, p.point):
            rows.append(
                {
                    "obs_id": p.obs_id,
                    "player_id": pid,
                    "predicted": float(v),
                    "actual": actual[p.obs_id][pid],
                    "converged": p.converged,
                }
            )
    return pd.DataFrame(rows, columns=["obs_id", "player_id", "predicted", "actual", "converged"])


def cmd_forecast(args: argparse.Namespace) -> int:
    config = build_config(args, "forecast")
    config.require("game", "test")
    if config.obs is not None:
        config.require("obs")
    game = load_estimated_game(config)
    test = load_observations(config.test, game)
    train = load_observations(config.obs, game) if config.obs is not None else None

    print_rule(f"Forecasting {len(test)} held-out observations")
    progress = get_progress()
    progress.start()
    progress.add_task("Solving test games...", total=None)
    try:
        predictions = forecast(game, test, solver_params(config), max_workers=config.max_workers)
    finally:
        progress.stop()

    if train is not None:
        metrics = score_forecast(predictions, test, train)
        baselines = {
            "constant_mean": constant_mean_forecast(test, train).to_dict(),
            "naive_last": naive_last_forecast(test, train).to_dict(),
        }
    else:
        pred, act, scored, failed = paired_errors(predictions, test)
        metrics = score(pred, act, n_test=scored, n_failed=failed)
        baselines = {}

    buf = io.StringIO()
    predictions_frame(predictions, test).to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    files = {
        config.output("predictions.csv"): buf.getvalue(),
        config.output("metrics.json"): json_text(versioned(metrics.to_dict())),
    }
    if baselines:
        files[config.output("baselines.json")] = json_text(versioned(baselines))
    atomic_write_group(files)

    console.print(f"  rmse={metrics.rmse:.6g}  mae={metrics.mae:.6g}  mase={metrics.mase:.6g}  n_test={metrics.n_test}  n_failed={metrics.n_failed}")
    for name, b in baselines.items():
        console.print(f"  [dim]{name}: rmse={b['rmse']:.6g}[/dim]")
    log(f"Wrote metrics to {config.output('metrics.json')}", style="success")
    return 0
