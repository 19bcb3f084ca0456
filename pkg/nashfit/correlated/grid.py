"""Grid search over coalition scalings c_ij with a Nash computation per cell."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigError, EstimationError
from ..estimation.observations import ObservationSet
from ..forecast.metrics import paired_errors, score
from ..forecast.predict import SolverParams, forecast
from ..game.nash import solve_nash
from ..game.spec import GameSpec
from .coalitions import CoalitionSpec, build_correlated_game

logger = logging.getLogger("Nashfit.correlated")

Pair = Tuple[int, int]
GridValues = Union[str, float, int, List[float]]


def parse_values(spec: GridValues) -> Tuple[float, ...]:
    """``[0.5, 1]``, ``"0.5,1,2"`` or an inclusive ``"start:stop:step"`` range; sorted, unique."""
    if isinstance(spec, (int, float)):
        values = [float(spec)]
    elif isinstance(spec, str):
        text = spec.strip()
        if ":" in text:
            try:
                start, stop, step = (float(v) for v in text.split(":"))
            except ValueError:
                raise ConfigError(f"Grid range '{spec}' must look like start:stop:step") from None
            if step <= 0 or stop < start:
                raise ConfigError(f"Grid range '{spec}' is empty")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + k * step, 12) for k in range(count)]
        else:
            try:
                values = [float(v) for v in text.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"Grid values '{spec}' are not numbers") from None
    else:
        values = [float(v) for v in spec]
    if not values:
        raise ConfigError("Grid dimension has no values")
    if any(v <= 0 for v in values):
        raise ConfigError(f"Scalings must be positive, got {values}")
    return tuple(sorted(set(values)))


def _parse_pair(key: str) -> Pair:
    try:
        i, j = (int(v) for v in str(key).replace(":", ",").split(","))
    except ValueError:
        raise ConfigError(f"Grid key '{key}' must name a pair 'i,j'") from None
    return i, j


@dataclass(frozen=True)
class ScalingGrid:
    """Per-pair value lists; ``default`` applies to pairs not listed (else their current scaling)."""

    values: Mapping[Pair, Tuple[float, ...]]
    default: Optional[Tuple[float, ...]] = None

    @classmethod
    def parse(cls, spec: Union[Mapping[str, GridValues], GridValues]) -> "ScalingGrid":
        if not isinstance(spec, Mapping):
            return cls({}, parse_values(spec))
        values, default = {}, None
        for key, v in spec.items():
            if key == "*":
                default = parse_values(v)
            else:
                values[_parse_pair(key)] = parse_values(v)
        return cls(values, default)

    def dimensions(self, coalition: CoalitionSpec) -> List[Tuple[Pair, Tuple[float, ...]]]:
        unknown = set(self.values) - set(coalition.pairs)
        if unknown:
            raise ConfigError(f"Grid names pair(s) outside every coalition: {sorted(unknown)}")
        dims = []
        for c in coalition.coalitions:
            for j, current in zip(c.members, c.scalings):
                pair = (c.player_id, j)
                dims.append((pair, self.values.get(pair, self.default or (current,))))
        return dims

    def size(self, coalition: CoalitionSpec) -> int:
        return int(np.prod([len(v) for _, v in self.dimensions(coalition)]))


@dataclass
class GridSearchResult:
    best_c: Dict[Pair, float]
    best_index: int
    table: pd.DataFrame
    best_game: GameSpec
    coalition: CoalitionSpec


def grid_search_scalings(
    base: GameSpec,
    estimates: Mapping[int, np.ndarray],
    coalition: CoalitionSpec,
    grid: ScalingGrid,
    eval_obs: ObservationSet,
    params: SolverParams = SolverParams(),
    max_workers: Optional[int] = None,
    on_cell=None,
) -> GridSearchResult:
    """Every cell in lexicographic order; the best cell minimizes held-out RMSE among converged cells."""
    if len(eval_obs) == 0:
        raise ConfigError("Grid search needs a non-empty evaluation set")
    base_est = base.with_thetas(estimates)
    warm = solve_nash(base_est, base_est.midpoint(), step=params.step, tol=params.tol, max_iter=params.max_iter)
    warm_start = dict(zip(base_est.player_ids, warm.point))

    dims = grid.dimensions(coalition)
    cells = list(itertools.product(*[values for _, values in dims]))
    pairs = [pair for pair, _ in dims]

    def evaluate(cell) -> dict:
        scaled = coalition.with_scalings(dict(zip(pairs, cell)))
        game = build_correlated_game(base_est, estimates, scaled)
        eq = solve_nash(game, warm.point, step=params.step, tol=params.tol, max_iter=params.max_iter)
        predictions = forecast(game, eval_obs, params, warm_start=warm_start)
        pred, act, _, failed = paired_errors(predictions, eval_obs)
        row = {f"c_{i}_{j}": c for (i, j), c in zip(pairs, cell)}
        row.update({f"x_{pid}": v for pid, v in zip(game.player_ids, eq.point)})
        row["rmse"] = score(pred, act).rmse
        row["converged"] = bool(eq.converged and failed == 0)
        if on_cell:
            on_cell(row)
        return row

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(evaluate, cells))
    else:
        rows = [evaluate(cell) for cell in cells]

    table = pd.DataFrame(rows)
    eligible = table["converged"] & np.isfinite(table["rmse"].astype(float))
    if not eligible.any():
        raise EstimationError("No grid cell converged; widen max_iter or shrink the step")
    flagged = int((~table["converged"]).sum())
    if flagged:
        logger.warning(f"{flagged} grid cell(s) did not converge and are excluded from the search")
    best_rmse = table.loc[eligible, "rmse"].min()
    best_index = int(np.flatnonzero(eligible & (table["rmse"] == best_rmse))[0])
    best_c = dict(zip(pairs, cells[best_index]))
    best_coalition = coalition.with_scalings(best_c)
    return GridSearchResult(
        best_c=best_c,
        best_index=best_index,
        table=table,
        best_game=build_correlated_game(base_est, estimates, best_coalition),
        coalition=best_coalition,
    )
