from unittest.mock import patch

import numpy as np
import pytest

from nashfit.estimation import (
    NoiseKind,
    NoiseModel,
    assemble_system,
    estimate_noise_freedman,
    estimate_noise_hc4,
    fit_fgls,
    fit_gls,
    solve_box_lsq,
    solve_cfgls,
    solve_cols,
    whiten,
)
from nashfit.estimation.noise import NoiseBlock
from nashfit.ensemble.learners import boosting_aic
from nashfit.linalg import PD_FLOOR, NormalEquations, is_rank_deficient

from .conftest import TRUE_THETA


class TestConstrainedOLS:
    def test_exact_recovery(self, structure_game, clean_observations):
        result = solve_cols(assemble_system(structure_game, clean_observations))
        for pid in (1, 2, 3):
            np.testing.assert_allclose(result.theta(pid), TRUE_THETA, atol=1e-6)
            assert np.all(result.mu(pid) >= 0)

    def test_zero_response(self, make_system):
        system = make_system(np.eye(2), [0.0, 0.0], lower=[0.0, -np.inf])
        result = solve_cols(system)
        np.testing.assert_array_equal(result.beta_hat, [0.0, 0.0])
        assert result.objective == 0.0

    def test_interior_matches_least_squares(self, make_system):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 3))
        Y = X @ [1.0, -2.0, 0.5] + 0.1 * rng.normal(size=30)
        result = solve_cols(make_system(X, Y))
        expected = np.linalg.lstsq(X, Y, rcond=None)[0]
        np.testing.assert_allclose(result.beta_hat, expected, atol=1e-8)

    def test_active_bound(self, make_system):
        X = np.eye(2)
        result = solve_cols(make_system(X, [-1.0, 2.0], lower=[0.0, -np.inf]))
        np.testing.assert_allclose(result.beta_hat, [0.0, 2.0], atol=1e-12)

    def test_fixed_coefficient_substituted(self, make_system):
        X = np.array([[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
        Y = X @ [3.0, 1.0]
        system = make_system(X, Y, lower=[3.0, -np.inf], upper=[3.0, np.inf])
        result = solve_cols(system)
        assert result.beta_hat[0] == 3.0
        assert result.beta_hat[1] == pytest.approx(1.0, abs=1e-10)

    def test_rank_deficient_uses_ridge(self, make_system):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        system = make_system(X, [1.0, 2.0, 3.0])
        sol = solve_box_lsq(system.X, system.Y, system.feasible)
        assert sol.ridge_used
        assert X[0] @ sol.beta == pytest.approx(1.0, abs=1e-6)


def near_collinear_design(n=50, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=n)
    return np.column_stack([a, a + 1e-9 * rng.normal(size=n)]), rng


class TestIllConditionedDesign:
    def test_detected_as_rank_deficient(self):
        X, _ = near_collinear_design()
        assert np.linalg.matrix_rank(X) == 2
        assert is_rank_deficient(X)

    def test_well_conditioned_design_not_flagged(self):
        X = np.random.default_rng(1).normal(size=(30, 3))
        assert not is_rank_deficient(X)
        assert not NormalEquations.from_design(X).ridge_used

    def test_normal_equations_use_ridge(self):
        X, _ = near_collinear_design()
        normal = NormalEquations.from_design(X)
        assert normal.ridge_used
        lev = normal.leverages()
        assert np.all(np.isfinite(lev))
        assert np.all(lev <= 1.0 + 1e-4)

    def test_failed_factorization_retries_with_ridge(self):
        X = np.array([[1.0, 1.0], [0.0, 0.0]])
        with patch("nashfit.linalg.is_rank_deficient", return_value=False):
            normal = NormalEquations.from_design(X)
        assert normal.ridge_used
        assert np.all(np.isfinite(normal.solve(np.array([1.0, 0.0]))))

    def test_estimators_run(self, make_system):
        X, rng = near_collinear_design()
        system = make_system(X, X[:, 0] + 0.1 * rng.normal(size=len(X)))
        result = solve_cols(system)
        assert result.diagnostics["ridge_used"]
        assert np.all(np.isfinite(result.beta_hat))

        noise = estimate_noise_hc4(system, result.residuals)
        assert noise.details["ridge_used"]
        assert np.all(np.isfinite(noise.diagonal))

        selection = boosting_aic(system, nu=0.1, m_max=20)
        assert 1 <= selection.m_hat < 20


class TestNoise:
    def test_freedman_block_average(self, make_system):
        system = make_system(np.ones((4, 1)), np.zeros(4), block_size=2)
        noise = estimate_noise_freedman(system, np.array([1.0, 0.0, 1.0, 0.0]))
        (block,) = noise.blocks
        np.testing.assert_allclose(block.matrix, [[1.0, 0.0], [0.0, PD_FLOOR]], atol=1e-15)
        G = noise.G_hat
        np.testing.assert_allclose(G[:2, :2], G[2:, 2:])
        assert G[0, 2] == 0.0

    def test_freedman_zero_residuals(self, make_system):
        system = make_system(np.ones((4, 1)), np.zeros(4), block_size=2)
        noise = estimate_noise_freedman(system, np.zeros(4))
        np.testing.assert_allclose(noise.G_hat, PD_FLOOR * np.eye(4), atol=1e-20)

    def test_hc4_fixture(self, make_system):
        system = make_system(np.ones((3, 1)), np.zeros(3))
        noise = estimate_noise_hc4(system, np.array([0.1, -0.2, 0.1]))
        np.testing.assert_allclose(np.diag(noise.G_hat), [0.015, 0.06, 0.015], atol=1e-12)
        delta = noise.details["delta"]
        assert np.all(delta > 0) and np.all(delta <= 4)
        np.testing.assert_allclose(delta, 1.0)

    def test_hc4_zero_residuals(self, make_system):
        system = make_system(np.ones((3, 1)), np.zeros(3))
        noise = estimate_noise_hc4(system, np.zeros(3))
        np.testing.assert_array_equal(noise.diagonal, np.full(3, PD_FLOOR))

    def test_whiten_halves_first_row(self, make_system):
        system = make_system([[2.0], [3.0]], [4.0, 5.0])
        w = whiten(system, NoiseModel(NoiseKind.HC4, 2, diagonal=np.array([4.0, 1.0])))
        np.testing.assert_array_equal(w.X, [[1.0], [3.0]])
        np.testing.assert_array_equal(w.Y, [2.0, 5.0])
        assert w.whitened

    def test_inverse_square_root(self):
        B = np.array([[2.0, 0.6], [0.6, 1.0]])
        noise = NoiseModel(NoiseKind.FREEDMAN, 4, blocks=(NoiseBlock(1, B, np.array([[0, 1], [2, 3]])),))
        left = noise.inv_sqrt_apply(noise.G_hat)
        np.testing.assert_allclose(noise.inv_sqrt_apply(left.T), np.eye(4), atol=1e-10)

    def test_spherical_whitening_keeps_argmin(self, make_system):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(20, 2))
        system = make_system(X, X @ [1.0, 2.0] + rng.normal(size=20), lower=[0.0, -np.inf])
        plain = solve_cols(system).beta_hat
        scaled = solve_cols(whiten(system, NoiseModel.spherical(20, 4.0))).beta_hat
        np.testing.assert_allclose(plain, scaled, atol=1e-8)


class TestFGLS:
    def test_noise_free_recovery(self, structure_game, clean_observations):
        result = solve_cfgls(assemble_system(structure_game, clean_observations))
        assert result.diagnostics["t_star"] == 1
        for pid in (1, 2, 3):
            np.testing.assert_allclose(result.theta(pid), TRUE_THETA, atol=1e-6)

    def test_single_step_skips_cross_validation(self, structure_game, noisy_observations):
        system = assemble_system(structure_game, noisy_observations)
        result = solve_cfgls(system, NoiseKind.HC4, max_outer=1)
        assert result.diagnostics["t_star"] == 1
        assert result.diagnostics["cv_scores"] == []
        np.testing.assert_array_equal(result.beta_hat, fit_fgls(system, NoiseKind.HC4, 1).beta_hat)

    def test_seeded_cross_validation_is_deterministic(self, structure_game, noisy_observations):
        system = assemble_system(structure_game, noisy_observations)
        a = solve_cfgls(system, max_outer=3, cv_folds=5, seed=4)
        b = solve_cfgls(system, max_outer=3, cv_folds=5, seed=4)
        assert a.diagnostics["cv_scores"] == b.diagnostics["cv_scores"]
        np.testing.assert_array_equal(a.beta_hat, b.beta_hat)
        assert 1 <= a.diagnostics["t_star"] <= 3

    def test_fold_count_reduced(self, make_system, caplog):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(4, 1))
        system = make_system(X, X[:, 0] + rng.normal(size=4))
        result = solve_cfgls(system, NoiseKind.HC4, max_outer=2, cv_folds=10)
        assert result.diagnostics["cv_folds"] == 4
        assert "reducing cross-validation folds" in caplog.text


class TestGLSEfficiency:
    def test_gls_variance_not_above_ols(self, make_system):
        rng = np.random.default_rng(8)
        n, size = 60, 3
        X = rng.normal(size=(n, 3))
        beta_true = np.array([1.0, -2.0, 0.5])
        # AR(1) correlation within each block, unequal scales across its rows
        lags = np.abs(np.subtract.outer(np.arange(size), np.arange(size)))
        scales = np.diag([0.3, 1.0, 3.0])
        B = scales @ (0.8**lags) @ scales
        rows = np.arange(n).reshape(-1, size)
        known = NoiseModel(NoiseKind.FREEDMAN, n, blocks=(NoiseBlock(1, B, rows),))
        L = np.linalg.cholesky(B)
        base = make_system(X, X @ beta_true, block_size=size)

        gls, ols = [], []
        for _ in range(500):
            e = (rng.standard_normal((n // size, size)) @ L.T).ravel()
            system = base.with_response(X @ beta_true + e)
            gls.append(fit_gls(system, known)[0])
            ols.append(solve_box_lsq(system.X, system.Y, system.feasible).beta)
        gls, ols = np.array(gls), np.array(ols)

        assert np.all(gls.var(axis=0) <= 1.05 * ols.var(axis=0))
        for sample in (gls, ols):
            se = sample.std(axis=0) / np.sqrt(len(sample))
            assert np.all(np.abs(sample.mean(axis=0) - beta_true) <= 4 * se)
