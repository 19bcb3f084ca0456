import itertools

import numpy as np
import pytest

from nashfit.correlated import (
    Coalition,
    CoalitionSpec,
    CovarianceView,
    ScalingGrid,
    build_correlated_game,
    build_correlated_utility,
    grid_search_scalings,
    identity_coalitions,
    parse_values,
    select_coalitions,
)
from nashfit.estimation import Observation, ObservationSet, assemble_system
from nashfit.exceptions import ConfigError, DimensionError
from nashfit.forecast import forecast, score
from nashfit.forecast.metrics import paired_errors
from nashfit.game import evaluate_utility, solve_nash

ESTIMATES = {1: np.array([-1.0, 0.5]), 2: np.array([-1.0, 0.25])}


@pytest.fixture
def estimated_game(coupled_game):
    return coupled_game.with_thetas(ESTIMATES)


@pytest.fixture
def linked():
    return select_coalitions(CovarianceView(np.array([[1.0, 0.9], [0.9, 1.0]]), (1, 2)), threshold=0.5)


@pytest.fixture
def eval_obs():
    return ObservationSet((Observation(0, {1: 0.6, 2: 0.7}), Observation(1, {1: 0.55, 2: 0.65})))


class TestCoalitions:
    def test_diagonal_covariance_gives_singletons(self):
        spec = select_coalitions(CovarianceView(np.diag([1.0, 2.0, 3.0]), (1, 2, 3)), threshold=0.5)
        assert spec.is_identity
        assert spec.pairs == ((1, 1), (2, 2), (3, 3))

    def test_strong_correlation_links_players(self, linked):
        assert linked.get(1).members == (1, 2)
        assert linked.get(2).members == (1, 2)
        assert linked.get(1).signs == (1.0, 1.0)
        np.testing.assert_allclose(linked.get(1).weights, [1.0, 0.9])

    def test_negative_covariance_sign(self):
        cov = CovarianceView(np.array([[1.0, -0.9], [-0.9, 1.0]]), (1, 2))
        assert select_coalitions(cov, 0.5).get(1).signs == (1.0, -1.0)
        assert select_coalitions(cov, 0.5, sign_rule="positive").get(1).signs == (1.0, 1.0)

    def test_weak_correlation_below_threshold(self):
        cov = CovarianceView(np.array([[4.0, 0.2], [0.2, 1.0]]), (1, 2))
        assert select_coalitions(cov, 0.5).is_identity

    @pytest.mark.parametrize("threshold", [0.0, 1.0, -0.2])
    def test_threshold_range(self, threshold):
        with pytest.raises(ConfigError):
            select_coalitions(CovarianceView(np.eye(2), (1, 2)), threshold)

    def test_view_from_estimate_covariance(self, structure_game, clean_observations):
        layout = assemble_system(structure_game, clean_observations).layout
        C = np.diag(np.arange(1.0, layout.size + 1.0))
        view = CovarianceView.from_covariance(C, layout, {2: 1}, default=0)
        assert view.player_ids == (1, 2, 3)
        expected = [C[layout.segment(1).theta.start, layout.segment(1).theta.start],
                    C[layout.segment(2).theta.start + 1, layout.segment(2).theta.start + 1],
                    C[layout.segment(3).theta.start, layout.segment(3).theta.start]]
        np.testing.assert_array_equal(np.diag(view.sigma), expected)
        with pytest.raises(ConfigError):
            CovarianceView.from_covariance(C, layout, {1: 5}, default=0)

    def test_coalition_must_hold_its_player(self):
        with pytest.raises(ConfigError):
            Coalition(1, (2,), (1.0,), (1.0,))

    def test_scalings_positive(self):
        with pytest.raises(ConfigError):
            Coalition(1, (1,), (1.0,), (1.0,), scalings=(0.0,))


class TestCorrelatedUtility:
    def test_identity_coalition_reproduces_base(self, estimated_game):
        game = build_correlated_game(estimated_game, ESTIMATES, identity_coalitions((1, 2)))
        for pid in (1, 2):
            np.testing.assert_array_equal(game.player(pid).utility.theta, ESTIMATES[pid])
            assert game.player(pid).utility.known_scale == 1.0
        x = [0.3, 0.8]
        for i in range(2):
            assert evaluate_utility(game, i, x) == evaluate_utility(estimated_game, i, x)

    def test_mixed_weights(self, estimated_game):
        coalition = CoalitionSpec((Coalition(1, (1, 2), (1.0, -1.0), (1.0, 0.9), scalings=(1.0, 2.0)),))
        u = build_correlated_utility(estimated_game, ESTIMATES, coalition, 1)
        np.testing.assert_allclose(u.theta, ESTIMATES[1] + 0.45 * ESTIMATES[2])
        assert u.known_scale == pytest.approx(1.0 - 0.45)

    def test_uniform_scaling_keeps_equilibrium(self, estimated_game, linked):
        base = solve_nash(build_correlated_game(estimated_game, ESTIMATES, linked))
        scaled = linked.with_scalings({pair: 2.0 for pair in linked.pairs})
        other = solve_nash(build_correlated_game(estimated_game, ESTIMATES, scaled))
        assert base.converged and other.converged
        np.testing.assert_allclose(base.point, other.point, atol=1e-6)

    def test_missing_member_estimate(self, estimated_game, linked):
        with pytest.raises(ConfigError):
            build_correlated_utility(estimated_game, {1: ESTIMATES[1]}, linked, 1)

    def test_basis_mismatch(self, estimated_game, linked):
        with pytest.raises(DimensionError):
            build_correlated_utility(estimated_game, {1: ESTIMATES[1], 2: np.zeros(3)}, linked, 1)


class TestParseValues:
    @pytest.mark.parametrize(
        "spec,expected",
        [
            ("0.5,1,2", (0.5, 1.0, 2.0)),
            ("0.5:1.5:0.5", (0.5, 1.0, 1.5)),
            ([2, 1, 1], (1.0, 2.0)),
            (3, (3.0,)),
        ],
    )
    def test_forms(self, spec, expected):
        assert parse_values(spec) == expected

    @pytest.mark.parametrize("spec", ["0,1", "a,b", "2:1:0.5", "1:2", "", []])
    def test_rejected(self, spec):
        with pytest.raises(ConfigError):
            parse_values(spec)

    def test_grid_keys(self, linked):
        grid = ScalingGrid.parse({"1,2": [0.5, 1], "*": "1"})
        assert grid.values == {(1, 2): (0.5, 1.0)}
        assert grid.default == (1.0,)
        assert grid.size(linked) == 2

    def test_unlisted_pairs_keep_their_scaling(self, linked):
        grid = ScalingGrid.parse({"2,1": "1,3"})
        dims = dict(grid.dimensions(linked))
        assert dims[(1, 1)] == (1.0,)
        assert dims[(2, 1)] == (1.0, 3.0)

    def test_unknown_pair(self, linked):
        with pytest.raises(ConfigError):
            ScalingGrid.parse({"3,4": "1"}).dimensions(linked)


class TestGridSearch:
    def test_single_cell_identity(self, synthetic_game, clean_observations):
        _, eval_obs = clean_observations.split(5)
        coalition = identity_coalitions(synthetic_game.player_ids)
        result = grid_search_scalings(
            synthetic_game, synthetic_game.thetas, coalition, ScalingGrid.parse(1.0), eval_obs
        )
        assert len(result.table) == 1
        assert result.best_index == 0
        assert result.best_c == {(1, 1): 1.0, (2, 2): 1.0, (3, 3): 1.0}
        assert result.table.loc[0, "rmse"] <= 1e-6

    def test_matches_brute_force(self, estimated_game, linked, eval_obs):
        values = (0.5, 1.0, 2.0)
        seen = []
        result = grid_search_scalings(
            estimated_game, ESTIMATES, linked, ScalingGrid.parse(list(values)), eval_obs, on_cell=seen.append
        )
        assert len(result.table) == 81 == len(seen)
        assert list(result.table.columns) == ["c_1_1", "c_1_2", "c_2_1", "c_2_2", "x_1", "x_2", "rmse", "converged"]
        assert result.table["converged"].all()

        brute = []
        for cell in itertools.product(values, repeat=4):
            game = build_correlated_game(estimated_game, ESTIMATES, linked.with_scalings(dict(zip(linked.pairs, cell))))
            pred, act, _, _ = paired_errors(forecast(game, eval_obs), eval_obs)
            brute.append(score(pred, act).rmse)
        np.testing.assert_allclose(result.table["rmse"], brute, atol=1e-6)
        assert result.table.loc[result.best_index, "rmse"] == result.table["rmse"].min()
        assert result.best_c == dict(zip(linked.pairs, list(itertools.product(values, repeat=4))[result.best_index]))
        assert result.coalition.get(1).scalings == (result.best_c[(1, 1)], result.best_c[(1, 2)])

    def test_thread_pool_same_table(self, estimated_game, linked, eval_obs):
        grid = ScalingGrid.parse({"1,2": "0.5,2", "2,1": "0.5,2"})
        serial = grid_search_scalings(estimated_game, ESTIMATES, linked, grid, eval_obs)
        pooled = grid_search_scalings(estimated_game, ESTIMATES, linked, grid, eval_obs, max_workers=3)
        assert serial.table.equals(pooled.table)
        assert serial.best_index == pooled.best_index

    def test_empty_evaluation_set(self, estimated_game, linked):
        with pytest.raises(ConfigError):
            grid_search_scalings(estimated_game, ESTIMATES, linked, ScalingGrid.parse(1.0), ObservationSet(()))
