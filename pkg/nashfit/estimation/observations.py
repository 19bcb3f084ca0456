"""Equilibrium observations: one record per observed play, over its participants."""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigError, DomainError, EstimationError, InputError
from ..serializer import atomic_write_text
from ..game.spec import GameSpec

logger = logging.getLogger("Nashfit.estimation")

REQUIRED_COLUMNS = ("obs_id", "player_id", "action")
INCENTIVE_PREFIX = "incentive_"
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Observation:
    obs_id: int
    actions: Dict[int, float]
    incentives: Dict[int, Tuple[float, ...]] = field(default_factory=dict)

    @property
    def participants(self) -> Tuple[int, ...]:
        return tuple(self.actions)

    def action_vector(self, game: GameSpec) -> np.ndarray:
        """Actions of ``game``'s players, in game order."""
        return np.array([self.actions[pid] for pid in game.player_ids])

    def context(self, game: GameSpec) -> GameSpec:
        """The game among this record's participants with its incentive weights applied."""
        return game.restrict(self.participants).with_incentives(self.incentives)


@dataclass(frozen=True)
class ObservationSet:
    records: Tuple[Observation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for rec in self.records:
            if not rec.actions:
                raise InputError(f"Observation {rec.obs_id} has no participants")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def obs_ids(self) -> Tuple[int, ...]:
        return tuple(r.obs_id for r in self.records)

    @property
    def player_ids(self) -> Tuple[int, ...]:
        seen: Dict[int, None] = {}
        for r in self.records:
            for pid in r.actions:
                seen.setdefault(pid, None)
        return tuple(seen)

    def count(self, player_id: int) -> int:
        """n_i: records whose participant set contains the player."""
        return sum(1 for r in self.records if player_id in r.actions)

    @property
    def n(self) -> int:
        return sum(len(r.actions) for r in self.records)

    def player_series(self, player_id: int) -> np.ndarray:
        return np.array([r.actions[player_id] for r in self.records if player_id in r.actions])

    def validate(self, game: GameSpec, tol: float = 1e-12) -> None:
        """Every action must belong to a known player and lie in that player's 𝒞_i."""
        known = set(game.player_ids)
        for r in self.records:
            for pid, value in r.actions.items():
                if pid not in known:
                    raise ConfigError(f"Observation {r.obs_id} names unknown player {pid}")
                if not game.player(pid).constraints.contains(value, tol):
                    raise DomainError(
                        f"Observation {r.obs_id}: action {value!r} of player {pid} "
                        f"lies outside its constraint set"
                    )

    def split(self, test_size: Union[int, float]) -> Tuple["ObservationSet", "ObservationSet"]:
        """Ordered hold-out: the last ``test_size`` records (or that fraction) become the test set."""
        n = len(self.records)
        if isinstance(test_size, float) and 0 < test_size < 1:
            test_size = int(round(n * test_size))
        test_size = int(test_size)
        if test_size < 0 or test_size > n:
            raise EstimationError(f"Cannot hold out {test_size} of {n} observations")
        cut = n - test_size
        return ObservationSet(self.records[:cut]), ObservationSet(self.records[cut:])

    def aggregate(self, window: int) -> "ObservationSet":
        """Averages consecutive windows of records per player (actions and incentive weights)."""
        if window < 1:
            raise EstimationError("Aggregation window must be at least 1")
        if window == 1:
            return self
        out = []
        for start in range(0, len(self.records), window):
            chunk = self.records[start : start + window]
            actions: Dict[int, List[float]] = {}
            incentives: Dict[int, List[Tuple[float, ...]]] = {}
            for r in chunk:
                for pid, value in r.actions.items():
                    actions.setdefault(pid, []).append(value)
                for pid, weights in r.incentives.items():
                    incentives.setdefault(pid, []).append(weights)
            avg_incentives = {}
            for pid, rows in incentives.items():
                if len({len(w) for w in rows}) == 1:
                    avg_incentives[pid] = tuple(np.mean(np.array(rows), axis=0).tolist())
            out.append(
                Observation(
                    obs_id=chunk[0].obs_id,
                    actions={pid: float(np.mean(v)) for pid, v in actions.items()},
                    incentives=avg_incentives,
                )
            )
        return ObservationSet(tuple(out))

    # -- CSV ---------------------------------------------------------------

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "ObservationSet":
        missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
        if missing:
            raise InputError(f"Observation table is missing column(s): {', '.join(missing)}")
        inc_cols = sorted((c for c in df.columns if str(c).startswith(INCENTIVE_PREFIX)), key=_incentive_index)
        if df.empty:
            return cls(())
        if df[list(REQUIRED_COLUMNS)].isna().any().any():
            raise InputError("Observation table has empty obs_id/player_id/action cells")
        df = df.assign(
            obs_id=_integer_column(df, "obs_id"),
            player_id=_integer_column(df, "player_id"),
            action=pd.to_numeric(df["action"], errors="coerce"),
            **{c: _numeric_column(df, c) for c in inc_cols},
        )
        if not np.all(np.isfinite(df["action"].to_numpy(dtype=float))):
            raise InputError("Observation table contains non-numeric or non-finite actions")
        if df.duplicated(["obs_id", "player_id"]).any():
            raise InputError("Observation table repeats a (obs_id, player_id) pair")

        records = []
        for obs_id, group in df.groupby("obs_id", sort=False):
            actions: Dict[int, float] = {}
            incentives: Dict[int, Tuple[float, ...]] = {}
            for _, row in group.iterrows():
                pid = int(row["player_id"])
                actions[pid] = float(row["action"])
                weights = _incentive_weights(row, inc_cols, int(obs_id), pid)
                if weights:
                    incentives[pid] = weights
            records.append(Observation(int(obs_id), actions, incentives))
        return cls(tuple(records))

    @classmethod
    def read_csv(cls, path) -> "ObservationSet":
        path = Path(path)
        if not path.exists():
            raise InputError(f"Observation file not found: {path}")
        try:
            df = pd.read_csv(path, float_precision="round_trip")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
            raise InputError(f"Could not parse observation file {path}: {e}") from e
        return cls.from_frame(df)

    def to_frame(self) -> pd.DataFrame:
        width = max((len(w) for r in self.records for w in r.incentives.values()), default=0)
        inc_cols = [f"{INCENTIVE_PREFIX}{k + 1}" for k in range(width)]
        rows = []
        for r in self.records:
            for pid, value in r.actions.items():
                row = {"obs_id": r.obs_id, "player_id": pid, "action": value}
                weights = r.incentives.get(pid, ())
                for k, col in enumerate(inc_cols):
                    row[col] = weights[k] if k < len(weights) else math.nan
                rows.append(row)
        df = pd.DataFrame(rows, columns=list(REQUIRED_COLUMNS) + inc_cols)
        return df.astype({"obs_id": "int64", "player_id": "int64", "action": "float64"})

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.to_frame().to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        return atomic_write_text(path, self.to_csv_text())


def _integer_column(df: pd.DataFrame, name: str) -> pd.Series:
    values = pd.to_numeric(df[name], errors="coerce")
    bad = values.isna() | (values % 1 != 0)
    if bad.any():
        raise InputError(f"Observation table has a non-integer {name}: {df.loc[bad, name].iloc[0]!r}")
    return values.astype("int64")


def _numeric_column(df: pd.DataFrame, name: str) -> pd.Series:
    values = pd.to_numeric(df[name], errors="coerce")
    bad = values.isna() & df[name].notna()
    if bad.any():
        raise InputError(f"Observation table has a non-numeric {name}: {df.loc[bad, name].iloc[0]!r}")
    return values


def _incentive_index(column) -> int:
    suffix = str(column)[len(INCENTIVE_PREFIX):]
    if not suffix.isdigit() or int(suffix) < 1:
        raise InputError(f"Incentive column '{column}' must be named {INCENTIVE_PREFIX}<k> with k >= 1")
    return int(suffix)


def _incentive_weights(row, inc_cols: Sequence[str], obs_id: int, pid: int) -> Tuple[float, ...]:
    values: List[Optional[float]] = [
        None if pd.isna(row[c]) else float(row[c]) for c in inc_cols
    ]
    while values and values[-1] is None:
        values.pop()
    if any(v is None for v in values):
        raise InputError(
            f"Observation {obs_id}, player {pid}: incentive columns have gaps"
        )
    return tuple(values)
