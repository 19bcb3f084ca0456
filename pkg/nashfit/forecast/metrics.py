"""Forecast scores (RMSE, MAE, MASE) and the bias-variance view of an ensemble."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..exceptions import DimensionError, EstimationError
from ..estimation.observations import ObservationSet
from ..estimation.system import CoefficientLayout
from .predict import Prediction

logger = logging.getLogger("Nashfit.forecast")

BIAS_METHODS = ("bagging", "bumping", "boosting")


@dataclass
class MetricsReport:
    rmse: float
    mae: float
    mase: float
    n_test: int
    n_failed: int = 0
    mean_error: float = math.nan

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "mase": self.mase,
            "n_test": self.n_test,
            "n_failed": self.n_failed,
        }


def naive_scale(series: Sequence[Sequence[float]]) -> float:
    """Mean absolute one-step difference, pooled over every series; NaN when undefined."""
    diffs = [np.abs(np.diff(np.asarray(s, dtype=float))) for s in series if len(s) > 1]
    if not diffs:
        return math.nan
    return float(np.mean(np.concatenate(diffs)))


def score(predictions, actuals, naive_reference: Optional[Sequence[Sequence[float]]] = None, n_test: Optional[int] = None, n_failed: int = 0) -> MetricsReport:
    """Pooled errors over all player components."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    a = np.asarray(actuals, dtype=float).reshape(-1)
    if p.shape != a.shape:
        raise DimensionError(f"{p.size} predictions for {a.size} actual values")
    n_test = len(p) if n_test is None else n_test
    if len(p) == 0:
        return MetricsReport(math.nan, math.nan, math.nan, n_test, n_failed)
    e = p - a
    rmse = float(np.sqrt(np.mean(e**2)))
    mae = float(np.mean(np.abs(e)))
    scale = naive_scale(naive_reference) if naive_reference is not None else math.nan
    mase = mae / scale if scale > 0 else math.nan
    return MetricsReport(rmse, mae, mase, n_test, n_failed, float(np.mean(e)))


def paired_errors(predictions: Sequence[Prediction], test: ObservationSet):
    """(predicted, actual) component pairs of converged forecasts, plus the failure count."""
    actual_by_obs = {r.obs_id: r.actions for r in test.records}
    pred, act = [], []
    failed = 0
    scored = 0
    for p in predictions:
        if not p.converged:
            failed += 1
            continue
        scored += 1
        actions = actual_by_obs[p.obs_id]
        for pid, v in zip(p.player_ids, p.point):
            pred.append(float(v))
            act.append(actions[pid])
    return np.array(pred), np.array(act), scored, failed


def training_series(train: ObservationSet) -> List[np.ndarray]:
    return [train.player_series(pid) for pid in train.player_ids]


def score_forecast(predictions: Sequence[Prediction], test: ObservationSet, train: ObservationSet) -> MetricsReport:
    pred, act, scored, failed = paired_errors(predictions, test)
    return score(pred, act, training_series(train), n_test=scored, n_failed=failed)


def constant_mean_forecast(test: ObservationSet, train: ObservationSet) -> MetricsReport:
    """Baseline: every player plays their training mean."""
    means = {pid: float(np.mean(train.player_series(pid))) for pid in train.player_ids}
    pred, act = [], []
    for r in test.records:
        for pid, v in r.actions.items():
            if pid in means:
                pred.append(means[pid])
                act.append(v)
    return score(pred, act, training_series(train), n_test=len(test))


def naive_last_forecast(test: ObservationSet, train: ObservationSet) -> MetricsReport:
    """Baseline: every player repeats their last training action."""
    last = {pid: float(train.player_series(pid)[-1]) for pid in train.player_ids}
    pred, act = [], []
    for r in test.records:
        for pid, v in r.actions.items():
            if pid in last:
                pred.append(last[pid])
                act.append(v)
    return score(pred, act, training_series(train), n_test=len(test))


@dataclass
class BiasVarianceReport:
    reference: np.ndarray
    variance: np.ndarray
    bootstrap_bias: np.ndarray
    method_bias: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_frame(self, layout: Optional[CoefficientLayout] = None) -> pd.DataFrame:
        rows = []
        for k in range(len(self.reference)):
            player, coefficient = _label_parts(layout, k)
            row = {"player": player, "coefficient": coefficient, "cfgls": self.reference[k]}
            for name in BIAS_METHODS:
                row[f"bias_{name}"] = self.method_bias[name][k] if name in self.method_bias else math.nan
            row["variance"] = self.variance[k]
            row["bootstrap_bias"] = self.bootstrap_bias[k]
            rows.append(row)
        columns = ["player", "coefficient", "cfgls"] + [f"bias_{m}" for m in BIAS_METHODS] + ["variance", "bootstrap_bias"]
        return pd.DataFrame(rows, columns=columns)


def _label_parts(layout: Optional[CoefficientLayout], k: int):
    if layout is None:
        return "", str(k)
    for seg in layout.segments:
        if seg.mu.start <= k < seg.theta.stop:
            return seg.player_id, layout.labels[k].split(".", 1)[1]
    return "", layout.labels[k]


def bias_variance(
    member_estimates: Sequence[np.ndarray],
    method_estimates: Mapping[str, np.ndarray],
    reference_cfgls: np.ndarray,
) -> BiasVarianceReport:
    """Per-coefficient population variance of the members and biases against the cFGLS reference."""
    if len(member_estimates) == 0:
        raise EstimationError("Bias-variance needs at least one bootstrap member")
    B = np.vstack([np.asarray(b, dtype=float) for b in member_estimates])
    ref = np.asarray(reference_cfgls, dtype=float)
    return BiasVarianceReport(
        reference=ref,
        variance=B.var(axis=0),
        bootstrap_bias=B.mean(axis=0) - ref,
        method_bias={name: np.asarray(v, dtype=float) - ref for name, v in method_estimates.items()},
    )


def mse_decomposition(members: Sequence[np.ndarray], target: np.ndarray):
    """(MSE, bias², variance) of members about a target, per coefficient."""
    B = np.vstack([np.asarray(b, dtype=float) for b in members])
    target = np.asarray(target, dtype=float)
    mse = np.mean((B - target) ** 2, axis=0)
    bias2 = (B.mean(axis=0) - target) ** 2
    return mse, bias2, B.var(axis=0)
