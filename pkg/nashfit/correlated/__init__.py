from .coalitions import (
    Coalition,
    CoalitionSpec,
    CovarianceView,
    SignRule,
    build_correlated_game,
    build_correlated_utility,
    identity_coalitions,
    select_coalitions,
)
from .grid import GridSearchResult, ScalingGrid, grid_search_scalings, parse_values
