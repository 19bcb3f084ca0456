"""Game file schema (JSON) and conversion to/from :class:`GameSpec`.

Example::

    {
      "format_version": 1,
      "players": [
        {
          "player_id": 1,
          "bounds": {"lower": 0, "upper": 20},
          "concave": true,
          "basis": [
            {"kind": "own_quadratic", "weight": -1.0},
            {"kind": "cross_bilinear", "weight": 0.5}
          ],
          "known_part": [
            {"kind": "own_linear", "weight": 10.0, "incentive": true, "range": [5, 15]}
          ]
        }
      ]
    }

A basis ``weight`` of ``null`` means "to be estimated". ``lower``/``upper``/``fixed``
on a basis term define Θ_i; ``concave`` adds the default curvature sign bounds.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..exceptions import ConfigError, InputError
from ..serializer import FORMAT_VERSION, atomic_write_text, json_text
from .basis import BasisFunction, BasisKind, concavity_bounds
from .spec import ConstraintSet, GameSpec, KnownTerm, PlayerSpec, UtilitySpec


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


class BoundsModel(BaseModel):
    lower: Optional[float] = None
    upper: Optional[float] = None


class BasisTermModel(BaseModel):
    kind: BasisKind
    params: List[float] = Field(default_factory=list)
    weight: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    fixed: Optional[float] = None


class KnownTermModel(BaseModel):
    kind: BasisKind
    params: List[float] = Field(default_factory=list)
    weight: float
    incentive: bool = False
    range: Optional[Tuple[float, float]] = None


class PlayerModel(BaseModel):
    player_id: int
    bounds: BoundsModel = Field(default_factory=BoundsModel)
    concave: bool = False
    basis: List[BasisTermModel]
    known_part: List[KnownTermModel] = Field(default_factory=list)
    known_scale: float = 1.0

    def to_player(self) -> PlayerSpec:
        basis, theta, lower, upper = [], [], [], []
        for term in self.basis:
            fn = BasisFunction(term.kind, tuple(term.params))
            lo = -math.inf if term.lower is None else term.lower
            hi = math.inf if term.upper is None else term.upper
            if self.concave:
                c_lo, c_hi = concavity_bounds(fn)
                lo, hi = max(lo, c_lo), min(hi, c_hi)
            weight = term.weight
            if term.fixed is not None:
                lo = hi = term.fixed
                weight = term.fixed if weight is None else weight
            basis.append(fn)
            theta.append(math.nan if weight is None else weight)
            lower.append(lo)
            upper.append(hi)
        known = tuple(
            KnownTerm(
                basis=BasisFunction(t.kind, tuple(t.params)),
                weight=t.weight,
                incentive=t.incentive,
                weight_range=None if t.range is None else tuple(t.range),
            )
            for t in self.known_part
        )
        utility = UtilitySpec(
            basis=tuple(basis),
            theta=np.array(theta),
            known_part=known,
            theta_lower=np.array(lower),
            theta_upper=np.array(upper),
            known_scale=self.known_scale,
        )
        return PlayerSpec(
            player_id=self.player_id,
            utility=utility,
            constraints=ConstraintSet.box(self.bounds.lower, self.bounds.upper),
        )

    @classmethod
    def from_player(cls, player: PlayerSpec) -> "PlayerModel":
        u = player.utility
        basis = []
        for k, fn in enumerate(u.basis):
            lo, hi = u.theta_lower[k], u.theta_upper[k]
            fixed = float(lo) if lo == hi else None
            basis.append(
                BasisTermModel(
                    kind=fn.kind,
                    params=list(fn.params),
                    weight=_finite_or_none(u.theta[k]),
                    lower=None if fixed is not None else _finite_or_none(lo),
                    upper=None if fixed is not None else _finite_or_none(hi),
                    fixed=fixed,
                )
            )
        known = [
            KnownTermModel(
                kind=t.basis.kind,
                params=list(t.basis.params),
                weight=t.weight,
                incentive=t.incentive,
                range=t.weight_range,
            )
            for t in u.known_part
        ]
        cs = player.constraints
        return cls(
            player_id=player.player_id,
            bounds=BoundsModel(lower=_finite_or_none(cs.lower), upper=_finite_or_none(cs.upper)),
            basis=basis,
            known_part=known,
            known_scale=u.known_scale,
        )


class GameFile(BaseModel):
    format_version: int = FORMAT_VERSION
    players: List[PlayerModel]

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {v} (expected {FORMAT_VERSION})")
        return v

    def to_game(self) -> GameSpec:
        return GameSpec(tuple(p.to_player() for p in self.players))

    @classmethod
    def from_game(cls, game: GameSpec) -> "GameFile":
        return cls(players=[PlayerModel.from_player(p) for p in game.players])


def load_game(path) -> GameSpec:
    path = Path(path)
    if not path.exists():
        raise InputError(f"Game file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return GameFile.model_validate(data).to_game()
    except json.JSONDecodeError as e:
        raise ConfigError(f"Game file {path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid game file {path}: {e}") from e


def dump_game(game: GameSpec) -> str:
    return json_text(GameFile.from_game(game))


def save_game(game: GameSpec, path) -> Path:
    return atomic_write_text(path, dump_game(game))
