from __future__ import annotations

import argparse
from typing import Callable, List, Optional

import numpy as np

from ..config import RunConfig, build_config
from ..console import console, get_progress, log, print_rule
from ..ensemble.bootstrap import BootstrapConfig, refit_members, wild_bootstrap
from ..ensemble.learners import EnsembleOutput, bagging, bumping, gradient_boost
from ..estimation.fgls import solve_cfgls
from ..estimation.noise import whiten
from ..estimation.solvers import EstimatorResult, solve_cols
from ..estimation.system import RegressionSystem, assemble_system
from ..game.schema import dump_game, load_game
from ..serializer import atomic_write_group, json_text
from .helpers import estimate_payload, load_observations


def fit_reference(system: RegressionSystem, config: RunConfig) -> EstimatorResult:
    """The cFGLS fit every ensemble starts from."""
    return solve_cfgls(system, config.noise, max_outer=config.max_outer, cv_folds=config.cv_folds, seed=config.cv_seed)


def bootstrap_members(
    system: RegressionSystem,
    reference: EstimatorResult,
    config: RunConfig,
    on_member: Optional[Callable[[int], None]] = None,
) -> List[np.ndarray]:
    cfg = BootstrapConfig(replicates=config.replicates, seed=config.seed, max_workers=config.max_workers)
    responses = wild_bootstrap(system, reference.beta_hat, reference.noise, cfg)
    return refit_members(
        system,
        responses,
        config.noise,
        reference.diagnostics["t_star"],
        max_workers=cfg.max_workers,
        on_member=on_member,
    )


def boost(system: RegressionSystem, reference: EstimatorResult, config: RunConfig) -> EnsembleOutput:
    """L2 boosting on the cFGLS-whitened system, starting from the cFGLS estimate."""
    whitened = whiten(system, reference.noise)
    return gradient_boost(whitened, nu=config.nu, m_max=config.mmax, beta_init=reference.beta_hat)


def run_estimator(
    system: RegressionSystem,
    config: RunConfig,
    on_member: Optional[Callable[[int], None]] = None,
) -> EstimatorResult:
    if config.method == "cols":
        return solve_cols(system)
    reference = fit_reference(system, config)
    if config.method == "cfgls":
        return reference
    if config.method == "boosting":
        result = boost(system, reference, config).to_result(system, reference.noise)
    else:
        members = bootstrap_members(system, reference, config, on_member)
        if config.method == "bagging":
            result = bagging(members, system).to_result(system, reference.noise)
        else:
            result = bumping(system, [reference.beta_hat] + members).to_result(system, reference.noise)
    result.diagnostics["cfgls_t_star"] = reference.diagnostics["t_star"]
    result.diagnostics["cfgls_beta_hat"] = reference.beta_hat
    return result


def cmd_estimate(args: argparse.Namespace) -> int:
    config = build_config(args, "estimate")
    config.require("game", "obs")
    game = load_game(config.game)
    obs = load_observations(config.obs, game)
    if config.average > 1:
        obs = obs.aggregate(config.average)
        log(f"Averaged observations in windows of {config.average}: {len(obs)} records", style="dim")

    print_rule(f"Estimating utilities ({config.estimator.value})")
    system = assemble_system(game, obs)
    log(f"Regression system: {system.n_d} rows, {system.layout.size} coefficients", style="dim")

    progress = get_progress()
    progress.start()
    stochastic = config.method in ("bagging", "bumping")
    task = progress.add_task("Refitting bootstrap members..." if stochastic else "Fitting...", total=config.replicates if stochastic else None)
    try:
        result = run_estimator(system, config, on_member=lambda _: progress.advance(task))
    finally:
        progress.stop()

    atomic_write_group(
        {
            config.output("estimate.json"): json_text(estimate_payload(result, config)),
            config.output("estimated_game.json"): dump_game(game.with_thetas(result.thetas)),
        }
    )

    for pid, theta in result.thetas.items():
        console.print(f"  [info]player {pid}[/info]: θ̂ = {np.array2string(theta, precision=6)}")
    log(f"Wrote estimate to {config.output('estimate.json')}", style="success")
    return 0
