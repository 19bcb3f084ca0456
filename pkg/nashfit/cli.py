"""Nashfit CLI: simulate, estimate, correlate, forecast and report workflows."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .commands.correlate import cmd_correlate
from .commands.estimate import cmd_estimate
from .commands.forecast import cmd_forecast
from .commands.report import cmd_report
from .commands.simulate import cmd_simulate
from .config import METHODS
from .console import log, setup_logging
from .correlated.coalitions import SignRule
from .estimation.noise import NoiseKind
from .exceptions import NashfitError


def _add_inputs(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "game": "Game file (JSON)",
        "obs": "Training observations (CSV)",
        "test": "Held-out observations (CSV)",
        "estimate": "Estimate report written by 'estimate'",
    }
    for name in names:
        p.add_argument(f"--{name}", help=helps[name])


def _add_estimator_options(p: argparse.ArgumentParser) -> None:
    grp = p.add_argument_group("Estimator Options")
    grp.add_argument("--noise", choices=[k.value for k in NoiseKind], help="Noise structure for cFGLS (default: freedman-block)")
    grp.add_argument("--replicates", type=int, help="Bootstrap replicates N (default: 200)")
    grp.add_argument("--nu", type=float, help="Boosting shrinkage in (0, 1] (default: 0.1)")
    grp.add_argument("--mmax", type=int, help="Boosting M_max (default: 500)")
    grp.add_argument("--cv-folds", dest="cv_folds", type=int, help="Cross-validation folds for cFGLS (default: 10)")
    grp.add_argument("--max-outer", dest="max_outer", type=int, help="Largest cFGLS iteration count tried (default: 5)")
    grp.add_argument("--average", type=int, help="Average consecutive observations in windows of this size")


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    grp = p.add_argument_group("Equilibrium Solver")
    grp.add_argument("--step", type=float, help="Projected gradient step (default: 0.05)")
    grp.add_argument("--tol", type=float, help="Convergence tolerance (default: 1e-8)")
    grp.add_argument("--max-iter", dest="max_iter", type=int, help="Iteration cap (default: 100000)")


def build_parser() -> argparse.ArgumentParser:
    # Base parser for shared arguments like --logger
    base_parser = argparse.ArgumentParser(add_help=False)
    base_parser.add_argument(
        "--logger",
        help="Enable file logging (provide path or defaults to nashfit.log)",
        nargs="?",
        const="nashfit.log",
    )
    base_parser.add_argument("--verbose", action="store_true", help="Debug-level library logging")
    base_parser.add_argument("--config", help="Settings file (JSON); flags override its values")
    base_parser.add_argument("--seed", type=int, help="Seed for every random draw")
    base_parser.add_argument("--out", help="Output directory (default: nashfit-out)")
    base_parser.add_argument("--max-workers", dest="max_workers", type=int, help="Thread pool size for refits and grid cells")

    parser = argparse.ArgumentParser(
        prog="nashfit", description="Nashfit CLI", parents=[base_parser]
    )
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser(
        "simulate", help="Generate equilibrium observations from a full game", parents=[base_parser]
    )
    _add_inputs(p_sim, "game")
    p_sim.add_argument("--n", type=int, help="Number of observations (default: 50)")
    p_sim.add_argument("--sigma-obs", dest="sigma_obs", type=float, help="Observation noise scale (default: 0)")
    p_sim.add_argument("--participation", type=float, help="Per-player participation probability (default: 1)")
    p_sim.add_argument("--holdout", type=int, help="Write the last N observations to test.csv")
    _add_solver_options(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser(
        "estimate", help="Estimate utility weights from observations", parents=[base_parser]
    )
    _add_inputs(p_est, "game", "obs")
    p_est.add_argument("--method", choices=METHODS, help="Estimator (default: cfgls)")
    _add_estimator_options(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_cor = sub.add_parser(
        "correlate", help="Grid-search a correlated game from a bagging estimate", parents=[base_parser]
    )
    _add_inputs(p_cor, "game", "estimate", "test")
    p_cor.add_argument("--grid", help="Scalings: '0.5,1,2', 'start:stop:step' or JSON {\"i,j\": [...], \"*\": [...]}")
    p_cor.add_argument("--threshold", type=float, help="Correlation threshold for coalitions (default: 0.5)")
    p_cor.add_argument("--coordinate", type=int, help="θ coordinate whose covariance defines coalitions (default: 0)")
    p_cor.add_argument("--sign-rule", dest="sign_rule", choices=[r.value for r in SignRule], help="Sign of ψ terms (default: sign)")
    _add_solver_options(p_cor)
    p_cor.set_defaults(func=cmd_correlate)

    p_fc = sub.add_parser(
        "forecast", help="Forecast held-out play and score it", parents=[base_parser]
    )
    _add_inputs(p_fc, "game", "estimate", "test", "obs")
    _add_solver_options(p_fc)
    p_fc.set_defaults(func=cmd_forecast)

    p_rep = sub.add_parser(
        "report", help="Bias-variance table for bagging, bumping and boosting", parents=[base_parser]
    )
    _add_inputs(p_rep, "game", "obs")
    _add_estimator_options(p_rep)
    p_rep.add_argument("--surface", action="store_true", help="Also write a plot-ready utility surface CSV")
    p_rep.add_argument("--surface-points", dest="surface_points", type=int, help="Grid points per axis (default: 21)")
    p_rep.set_defaults(func=cmd_report)

    return parser


def error_object(e: NashfitError) -> dict:
    payload = {"error": type(e).__name__, "message": str(e), "code": e.code or 1}
    instance = getattr(e, "instance", None)
    if instance:
        payload["instance"] = instance
    return payload


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Initialize logger if requested
    if getattr(args, "logger", None):
        from .console import set_log_file

        set_log_file(args.logger)
    setup_logging(logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING)

    if not hasattr(args, "func"):
        parser.print_help()
        return 0
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\nCancelled")
        return 1
    except NashfitError as e:
        log(str(e), style="error")
        print(json.dumps(error_object(e), default=str), file=sys.stderr)
        return e.code or 1
    except Exception as e:
        import traceback

        traceback.print_exc()
        log(f"Unexpected error: {e}", style="error")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
