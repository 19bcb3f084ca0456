from .basis import BasisFunction, BasisKind, concavity_bounds
from .spec import (
    ACTIVE_TOL,
    BoundConstraint,
    BoundKind,
    ConstraintSet,
    GameSpec,
    KnownTerm,
    PlayerSpec,
    UtilitySpec,
)
from .nash import (
    DifferentialNashCheck,
    EpsilonNashCheck,
    EquilibriumReport,
    best_response_gap,
    check_differential_nash,
    check_epsilon_nash,
    differential_game_form,
    evaluate_utility,
    is_isolated,
    omega_jacobian,
    project,
    recover_multipliers,
    solve_nash,
    utility_surface,
)
from .schema import GameFile, dump_game, load_game, save_game
