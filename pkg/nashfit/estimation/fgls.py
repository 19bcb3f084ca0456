"""Iterated constrained feasible GLS with a cross-validated iteration count."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..exceptions import EstimationError
from .noise import NoiseKind, NoiseModel, estimate_noise, whiten
from .solvers import EstimatorResult, Method, solve_box_lsq, solve_cols
from .system import RegressionSystem

logger = logging.getLogger("Nashfit.estimation")

# CV scores within this absolute distance of the minimum count as ties
CV_TIE_TOL = 1e-12


@dataclass(frozen=True)
class GLSStep:
    beta: np.ndarray
    noise: NoiseModel
    whitened_objective: float
    ridge_used: bool


def fgls_path(system: RegressionSystem, noise_kind: NoiseKind, steps: int, beta_init: np.ndarray = None) -> List[GLSStep]:
    """Alternates Ĝ-from-residuals and constrained GLS, ``steps`` times from a cOLS start."""
    if beta_init is None:
        beta_init = solve_box_lsq(system.X, system.Y, system.feasible).beta
    e = system.residuals(beta_init)
    path = []
    for _ in range(steps):
        noise = estimate_noise(noise_kind, system, e)
        w = whiten(system, noise)
        sol = solve_box_lsq(w.X, w.Y, w.feasible)
        e = system.residuals(sol.beta)
        path.append(
            GLSStep(
                beta=sol.beta,
                noise=noise,
                whitened_objective=float(np.linalg.norm(w.residuals(sol.beta))),
                ridge_used=sol.ridge_used,
            )
        )
    return path


def fold_assignment(system: RegressionSystem, folds: int, seed: int) -> List[np.ndarray]:
    """Observation ids in a seeded order, cut into contiguous blocks."""
    ids = system.obs_ids
    rng = np.random.default_rng(seed)
    order = ids[rng.permutation(len(ids))]
    return [f for f in np.array_split(order, folds) if len(f)]


def cross_validate_steps(system: RegressionSystem, noise_kind: NoiseKind, max_outer: int, folds: int, seed: int) -> np.ndarray:
    """Mean held-out squared error of every iterate t = 1..max_outer."""
    scores = np.zeros(max_outer)
    blocks = fold_assignment(system, folds, seed)
    for held_out in blocks:
        test_mask = np.isin(system.row_obs, held_out)
        train, test = system.subset_rows(~test_mask), system.subset_rows(test_mask)
        for t, step in enumerate(fgls_path(train, noise_kind, max_outer)):
            r = test.residuals(step.beta)
            scores[t] += float(np.mean(r**2))
    return scores / len(blocks)


def select_steps(scores: np.ndarray) -> int:
    best = float(np.min(scores))
    return int(np.flatnonzero(scores <= best + CV_TIE_TOL)[0]) + 1


def solve_cfgls(
    system: RegressionSystem,
    noise_kind: NoiseKind = NoiseKind.FREEDMAN,
    max_outer: int = 5,
    cv_folds: int = 10,
    seed: int = 0,
) -> EstimatorResult:
    """cFGLS: the returned iterate t* minimizes the cross-validated prediction error."""
    noise_kind = NoiseKind(noise_kind)
    if max_outer < 1:
        raise EstimationError("max_outer must be at least 1")
    if cv_folds < 2:
        raise EstimationError("cv_folds must be at least 2")

    n_obs = len(system.obs_ids)
    folds = cv_folds
    scores = np.zeros(0)
    if max_outer == 1:
        t_star = 1
    elif n_obs < 2:
        logger.warning("Fewer than two observations; cross validation skipped, using one GLS step")
        t_star = 1
    else:
        if n_obs < cv_folds:
            logger.warning(f"Only {n_obs} observations; reducing cross-validation folds from {cv_folds} to {n_obs}")
            folds = n_obs
        scores = cross_validate_steps(system, noise_kind, max_outer, folds, seed)
        t_star = select_steps(scores)

    return fit_fgls(system, noise_kind, t_star, diagnostics={"cv_folds": folds, "cv_scores": scores.tolist()})


def fit_fgls(system: RegressionSystem, noise_kind: NoiseKind, steps: int, beta_init: np.ndarray = None, diagnostics: dict = None) -> EstimatorResult:
    """Runs exactly ``steps`` GLS iterations on the full system (no CV)."""
    path = fgls_path(system, NoiseKind(noise_kind), steps, beta_init=beta_init)
    last = path[-1]
    info = {
        "t_star": steps,
        "noise_kind": NoiseKind(noise_kind).value,
        "ridge_used": any(s.ridge_used for s in path),
    }
    info.update(diagnostics or {})
    return EstimatorResult(
        beta_hat=last.beta,
        method=Method.CFGLS,
        residuals=system.residuals(last.beta),
        noise=last.noise,
        objective=last.whitened_objective,
        layout=system.layout,
        diagnostics=info,
    )


def fit_gls(system: RegressionSystem, noise: NoiseModel) -> Tuple[np.ndarray, float]:
    """Constrained GLS with a known Ĝ; returns (β̂, whitened objective)."""
    w = whiten(system, noise)
    result = solve_cols(w, noise=noise)
    return result.beta_hat, result.objective
