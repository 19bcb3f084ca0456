import numpy as np
import pytest

from nashfit.commands.simulate import simulate_observations
from nashfit.estimation.system import (
    CoefficientLayout,
    FeasibleSet,
    PlayerSegment,
    RegressionSystem,
)
from nashfit.game.schema import GameFile

# Ground truth of the 3-player synthetic game: own-quadratic, cross-bilinear
TRUE_THETA = (-1.0, 0.5)


def _player(pid, basis, known=(), lower=None, upper=None, concave=False):
    return {
        "player_id": pid,
        "bounds": {"lower": lower, "upper": upper},
        "concave": concave,
        "basis": [{"kind": k, "weight": w} for k, w in basis],
        "known_part": [dict(t) for t in known],
    }


@pytest.fixture
def make_game():
    """Factory: make_game([player dicts]) -> GameSpec through the file schema."""

    def factory(players):
        return GameFile.model_validate({"players": list(players)}).to_game()

    factory.player = _player
    return factory


@pytest.fixture
def coupled_game(make_game):
    """f_i = -x_i² + 0.5 x_1 x_2 + x_i on [0, 1]²; equilibrium (2/3, 2/3)."""
    return make_game(
        [
            _player(
                pid,
                [("own_quadratic", -1.0), ("cross_bilinear", 0.5)],
                [{"kind": "own_linear", "weight": 1.0}],
                lower=0.0,
                upper=1.0,
            )
            for pid in (1, 2)
        ]
    )


def synthetic_players(theta=TRUE_THETA, ids=(1, 2, 3)):
    return [
        _player(
            pid,
            [("own_quadratic", theta[0]), ("cross_bilinear", theta[1])],
            [{"kind": "own_linear", "weight": 10.0, "incentive": True, "range": [5.0, 15.0]}],
            lower=0.0,
            upper=20.0,
            concave=True,
        )
        for pid in ids
    ]


@pytest.fixture
def synthetic_game(make_game):
    return make_game(synthetic_players())


@pytest.fixture
def structure_game(make_game):
    """The synthetic game with every utility weight left to estimate."""
    return make_game(synthetic_players(theta=(None, None)))


@pytest.fixture(scope="session")
def clean_observations():
    game = GameFile.model_validate({"players": synthetic_players()}).to_game()
    return simulate_observations(game, 50, seed=11)


@pytest.fixture(scope="session")
def noisy_observations():
    game = GameFile.model_validate({"players": synthetic_players()}).to_game()
    return simulate_observations(game, 60, seed=5, sigma_obs=0.1)


def raw_system(X, Y, lower=None, upper=None, block_size=1):
    """Single-player system over plain (X, Y); every column is a θ coefficient."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float)
    n_d, k = X.shape
    segment = PlayerSegment(1, slice(0, 0), slice(0, k), n_d // block_size, block_size)
    layout = CoefficientLayout((segment,), tuple(f"player_1.theta_{j}" for j in range(k)))
    lower = np.full(k, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(k, np.inf) if upper is None else np.asarray(upper, dtype=float)
    return RegressionSystem(
        X=X,
        Y=Y,
        layout=layout,
        feasible=FeasibleSet(lower, upper),
        row_player=np.ones(n_d, dtype=int),
        row_obs=np.arange(n_d) // block_size,
        row_slot=np.arange(n_d) % block_size,
    )


@pytest.fixture
def make_system():
    return raw_system
