"""Run configuration: a settings file merged with command-line flags (flags win)."""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .correlated.coalitions import SignRule
from .ensemble.learners import DEFAULT_M_MAX, DEFAULT_NU
from .estimation.noise import NoiseKind
from .estimation.solvers import Method
from .exceptions import ConfigError, InputError
from .game.nash import DEFAULT_MAX_ITER, DEFAULT_STEP, DEFAULT_TOL
from .serializer import FORMAT_VERSION

METHODS = ("cols", "cfgls", "bagging", "bumping", "boosting")
STOCHASTIC_METHODS = ("bagging", "bumping")

METHOD_TAGS = {
    "cols": Method.COLS,
    "cfgls": Method.CFGLS,
    "bagging": Method.BAGGING,
    "bumping": Method.BUMPING,
    "boosting": Method.BOOSTING,
}

DEFAULT_OUT = Path("nashfit-out")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    command: Optional[str] = None

    game: Optional[Path] = None
    obs: Optional[Path] = None
    test: Optional[Path] = None
    estimate: Optional[Path] = None
    out: Path = DEFAULT_OUT

    method: str = "cfgls"
    noise: NoiseKind = NoiseKind.FREEDMAN
    replicates: int = Field(200, ge=1)
    nu: float = Field(DEFAULT_NU, gt=0, le=1)
    mmax: int = Field(DEFAULT_M_MAX, ge=1)
    cv_folds: int = Field(10, ge=2)
    max_outer: int = Field(5, ge=1)
    average: int = Field(1, ge=1)
    seed: Optional[int] = None
    max_workers: Optional[int] = Field(None, ge=1)

    # simulate
    n: int = Field(50, ge=0)
    sigma_obs: float = Field(0.0, ge=0)
    participation: float = Field(1.0, gt=0, le=1)
    holdout: int = Field(0, ge=0)

    # correlate
    grid: Union[str, float, List[float], Dict[str, Any], None] = None
    threshold: float = Field(0.5, gt=0, lt=1)
    coordinate: int = Field(0, ge=0)
    sign_rule: SignRule = SignRule.SIGN

    # equilibrium solver
    step: float = Field(DEFAULT_STEP, gt=0)
    tol: float = Field(DEFAULT_TOL, gt=0)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)

    # report
    surface: bool = False
    surface_points: int = Field(21, ge=2)

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {v} (expected {FORMAT_VERSION})")
        return v

    @field_validator("method")
    @classmethod
    def _known_method(cls, v: str) -> str:
        v = v.lower()
        if v not in METHODS:
            raise ValueError(f"unknown method '{v}' (choose from {', '.join(METHODS)})")
        return v

    @model_validator(mode="after")
    def _seeded(self) -> "RunConfig":
        needs_seed = self.command in ("simulate", "report") or (
            self.command == "estimate" and self.method in STOCHASTIC_METHODS
        )
        if needs_seed and self.seed is None:
            raise ValueError(f"'{self.command}' is stochastic and requires --seed")
        return self

    @property
    def estimator(self) -> Method:
        return METHOD_TAGS[self.method]

    @property
    def cv_seed(self) -> int:
        return 0 if self.seed is None else self.seed

    def require(self, *names: str) -> None:
        """Fails before any work when a named input path is unset or missing."""
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise InputError(f"Missing required input --{name.replace('_', '-')}")
            if not Path(path).exists():
                raise InputError(f"Input --{name.replace('_', '-')} not found: {path}")

    def output(self, name: str) -> Path:
        return Path(self.out) / name


def load_settings(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"Settings file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Settings file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Settings file {path} must hold a JSON object")
    return data


def build_config(args: argparse.Namespace, command: Optional[str] = None) -> RunConfig:
    """Settings file values overlaid with every flag the user actually passed."""
    values: Dict[str, Any] = {}
    settings = getattr(args, "config", None)
    if settings:
        values.update(load_settings(settings))
    for name in RunConfig.model_fields:
        if name == "command":
            continue
        flag = getattr(args, name, None)
        if flag is not None and flag is not False:
            values[name] = flag
    values["command"] = command or getattr(args, "command", None)
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}") from e
