"""Utility learning from observed Nash play: inverse estimation, robust ensembles, forecasting."""

# Fetch version from installed package metadata to avoid manual updates
try:
    from importlib.metadata import PackageNotFoundError, version

    try:
        __version__ = version("nashfit-kit")
    except PackageNotFoundError:
        __version__ = "0.0.0-dev"
except ImportError:
    __version__ = "0.0.0-dev"

from .exceptions import NashfitError
from .game import GameSpec, PlayerSpec, UtilitySpec, load_game, save_game, solve_nash
from .estimation import ObservationSet, assemble_system, solve_cfgls, solve_cols
from .ensemble import bagging, bumping, gradient_boost, wild_bootstrap
from .correlated import build_correlated_game, grid_search_scalings, select_coalitions
from .forecast import forecast, score_forecast

__all__ = [
    "NashfitError",
    "GameSpec",
    "PlayerSpec",
    "UtilitySpec",
    "load_game",
    "save_game",
    "solve_nash",
    "ObservationSet",
    "assemble_system",
    "solve_cols",
    "solve_cfgls",
    "wild_bootstrap",
    "bagging",
    "bumping",
    "gradient_boost",
    "select_coalitions",
    "build_correlated_game",
    "grid_search_scalings",
    "forecast",
    "score_forecast",
]
