"""Wild-bootstrap pseudo-data Ỹ_j = Xβ̂ + Ĝ^{1/2} ε_j and member refits."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from ..exceptions import EstimationError
from ..estimation.fgls import fit_fgls
from ..estimation.noise import NoiseKind, NoiseModel
from ..estimation.system import RegressionSystem

logger = logging.getLogger("Nashfit.ensemble")


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 200
    seed: int = 0
    max_workers: Optional[int] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise EstimationError("Bootstrap needs at least one replicate")


def replicate_rng(seed: int, j: int) -> np.random.Generator:
    """Independent stream for replicate ``j``."""
    return np.random.default_rng([int(seed), int(j)])


def pseudo_response(system: RegressionSystem, beta: np.ndarray, noise: NoiseModel, eps: np.ndarray) -> np.ndarray:
    return system.X @ beta + noise.sqrt_apply(eps)


def wild_bootstrap(system: RegressionSystem, beta_cfgls: np.ndarray, noise: NoiseModel, cfg: BootstrapConfig) -> List[np.ndarray]:
    return [
        pseudo_response(system, beta_cfgls, noise, replicate_rng(cfg.seed, j).standard_normal(system.n_d))
        for j in range(cfg.replicates)
    ]


def refit_members(
    system: RegressionSystem,
    responses: List[np.ndarray],
    noise_kind: NoiseKind,
    steps: int,
    max_workers: Optional[int] = None,
    on_member: Optional[Callable[[int], None]] = None,
) -> List[np.ndarray]:
    """cFGLS refit per pseudo-response with the same noise kind and iteration count."""

    def fit(j: int) -> np.ndarray:
        beta = fit_fgls(system.with_response(responses[j]), noise_kind, steps).beta_hat
        if on_member:
            on_member(j)
        return beta

    indices = range(len(responses))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            members = list(pool.map(fit, indices))
    else:
        members = [fit(j) for j in indices]
    logger.debug(f"Refit {len(members)} bootstrap members")
    return members
