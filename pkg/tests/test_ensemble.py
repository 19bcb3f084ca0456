import numpy as np
import pytest

from nashfit.ensemble import (
    BootstrapConfig,
    bagging,
    boosting_aic,
    bumping,
    gradient_boost,
    pseudo_response,
    refit_members,
    wild_bootstrap,
)
from nashfit.estimation import NoiseKind, NoiseModel, fit_fgls
from nashfit.exceptions import EstimationError


def diag_noise(values):
    values = np.asarray(values, dtype=float)
    return NoiseModel(NoiseKind.HC4, len(values), diagonal=values)


class TestWildBootstrap:
    def test_additive_term(self, make_system):
        system = make_system(np.eye(2), [0.0, 0.0])
        Y = pseudo_response(system, np.array([1.0, 1.0]), diag_noise([4.0, 1.0]), np.array([1.0, 1.0]))
        np.testing.assert_allclose(Y - system.X @ [1.0, 1.0], [2.0, 1.0])

    def test_same_seed_same_replicates(self, make_system):
        system = make_system(np.ones((5, 1)), np.zeros(5))
        cfg = BootstrapConfig(replicates=4, seed=9)
        a = wild_bootstrap(system, np.array([1.0]), diag_noise(np.ones(5)), cfg)
        b = wild_bootstrap(system, np.array([1.0]), diag_noise(np.ones(5)), cfg)
        for ya, yb in zip(a, b):
            np.testing.assert_array_equal(ya, yb)
        assert not np.array_equal(a[0], a[1])

    def test_pseudo_noise_mean(self, make_system):
        g = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
        system = make_system(np.ones((5, 1)), np.zeros(5))
        beta = np.array([3.0])
        cfg = BootstrapConfig(replicates=2000, seed=1)
        responses = np.array(wild_bootstrap(system, beta, diag_noise(g), cfg))
        drift = responses.mean(axis=0) - system.X @ beta
        assert np.all(np.abs(drift) <= 4 * np.sqrt(g / 2000))

    def test_needs_a_replicate(self):
        with pytest.raises(EstimationError):
            BootstrapConfig(replicates=0)

    def test_single_member_matches_direct_refit(self, make_system):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(12, 2))
        system = make_system(X, X @ [1.0, 0.5] + rng.normal(size=12), lower=[0.0, -np.inf])
        reference = fit_fgls(system, NoiseKind.HC4, 2)
        responses = wild_bootstrap(system, reference.beta_hat, reference.noise, BootstrapConfig(replicates=1, seed=3))
        members = refit_members(system, responses, NoiseKind.HC4, 2)
        direct = fit_fgls(system.with_response(responses[0]), NoiseKind.HC4, 2).beta_hat
        np.testing.assert_array_equal(bagging(members, system).beta_hat, direct)

    def test_thread_pool_keeps_order(self, make_system):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(10, 2))
        system = make_system(X, X @ [1.0, -1.0] + rng.normal(size=10))
        reference = fit_fgls(system, NoiseKind.HC4, 1)
        responses = wild_bootstrap(system, reference.beta_hat, reference.noise, BootstrapConfig(replicates=6, seed=2))
        serial = refit_members(system, responses, NoiseKind.HC4, 1)
        pooled = refit_members(system, responses, NoiseKind.HC4, 1, max_workers=3)
        np.testing.assert_array_equal(np.array(serial), np.array(pooled))


class TestBagging:
    def test_mean(self):
        out = bagging([np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        np.testing.assert_array_equal(out.beta_hat, [2.0, 3.0])

    def test_identical_members_zero_covariance(self):
        out = bagging([np.array([1.5, -2.25])] * 3)
        np.testing.assert_array_equal(out.covariance, np.zeros((2, 2)))

    def test_population_covariance(self):
        out = bagging([np.array([0.0]), np.array([2.0])])
        np.testing.assert_array_equal(out.covariance, [[1.0]])

    def test_random_members(self):
        rng = np.random.default_rng(0)
        members = list(rng.normal(size=(25, 4)))
        out = bagging(members)
        np.testing.assert_allclose(out.beta_hat, np.mean(members, axis=0), atol=1e-12)
        assert np.linalg.eigvalsh(out.covariance).min() >= -1e-10

    def test_projection_onto_feasible_set(self, make_system):
        system = make_system(np.eye(2), [0.0, 0.0], lower=[0.0, -np.inf])
        out = bagging([np.array([-3.0, 1.0]), np.array([1.0, 1.0])], system)
        np.testing.assert_array_equal(out.pre_projection, [-1.0, 1.0])
        np.testing.assert_array_equal(out.beta_hat, [0.0, 1.0])

    def test_no_members(self):
        with pytest.raises(EstimationError):
            bagging([])


class TestBumping:
    def test_least_training_error(self, make_system):
        system = make_system([[1.0]], [0.0])
        members = [np.array([np.sqrt(v)]) for v in (0.5, 0.2, 0.9)]
        out = bumping(system, members)
        assert out.selection_index == 1
        assert out.training_errors[1] == min(out.training_errors)

    def test_ties_keep_original_fit(self, make_system):
        system = make_system([[1.0]], [0.0])
        out = bumping(system, [np.array([1.0]), np.array([-1.0]), np.array([1.0])])
        assert out.selection_index == 0

    def test_interpolant_selected(self, make_system):
        system = make_system([[1.0], [2.0]], [2.0, 4.0])
        out = bumping(system, [np.array([1.9]), np.array([2.0]), np.array([2.1])])
        assert out.selection_index == 1
        assert out.training_errors[1] == 0.0


def oracle_m_hat(X, Y, nu, m_max):
    n = len(Y)
    H = X @ np.linalg.solve(X.T @ X, X.T)
    scores = []
    for m in range(1, m_max):
        B = np.eye(n) - np.linalg.matrix_power(np.eye(n) - nu * H, m)
        sigma2 = np.mean((Y - B @ Y) ** 2)
        tr = np.trace(B)
        denom = 1.0 - (tr + 2.0) / n
        scores.append(np.log(sigma2) + (1.0 + tr / n) / denom if denom > 0 else np.nan)
    scores = np.array(scores)
    return int(np.nanargmin(scores)) + 1, scores


class TestBoosting:
    def test_aic_matches_brute_force(self, make_system):
        rng = np.random.default_rng(12)
        for _ in range(20):
            n = int(rng.integers(10, 41))
            k = int(rng.integers(1, 5))
            X = rng.normal(size=(n, k))
            Y = X @ rng.normal(size=k) + rng.normal(size=n)
            selection = boosting_aic(make_system(X, Y), nu=0.1, m_max=60)
            m_hat, scores = oracle_m_hat(X, Y, 0.1, 60)
            np.testing.assert_allclose(selection.trace, scores, rtol=1e-8, atol=1e-10)
            assert scores[selection.m_hat - 1] <= scores[m_hat - 1] + 1e-9

    def test_residual_norm_non_increasing(self, make_system):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 3))
        system = make_system(X, X @ [1.0, 2.0, -1.0] + rng.normal(size=30))
        for nu in (0.05, 0.5, 1.0):
            out = gradient_boost(system, nu=nu, m_max=40)
            norms = out.residual_norms
            assert len(norms) == out.m_hat + 1
            assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_square_design_interpolates_in_one_step(self, make_system):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(4, 4))
        system = make_system(X, rng.normal(size=4))
        out = gradient_boost(system, nu=1.0, m_max=5)
        assert out.m_hat == 1
        assert out.aic_trace[0] == -np.inf
        assert out.residual_norms[-1] <= 1e-10

    def test_fitted_values_approach_projection(self, make_system):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(25, 2))
        Y = X @ [0.5, -0.5] + rng.normal(size=25)
        system = make_system(X, Y)
        target = X @ np.linalg.lstsq(X, Y, rcond=None)[0]
        out = gradient_boost(system, nu=0.1, m_max=50, steps=400)
        assert len(out.residual_norms) == 401
        norms = out.residual_norms
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
        # the fitted part contracts by (1 - ν) per step toward HY
        np.testing.assert_allclose(X @ out.pre_projection, target, atol=1e-8)

    def test_starts_from_given_estimate(self, make_system):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(15, 2))
        system = make_system(X, X @ [1.0, 1.0], lower=[0.0, -np.inf])
        out = gradient_boost(system, nu=0.2, m_max=10, beta_init=np.array([1.0, 1.0]))
        np.testing.assert_allclose(out.beta_hat, [1.0, 1.0], atol=1e-12)
        assert out.residual_norms[0] == pytest.approx(0.0, abs=1e-12)

    def test_projected_result_is_feasible(self, make_system):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(20, 2))
        system = make_system(X, X @ [-1.0, 1.0], lower=[0.0, -np.inf])
        out = gradient_boost(system, nu=0.5, m_max=20)
        assert system.feasible.contains(out.beta_hat)
        assert out.pre_projection[0] < 0.0

    def test_invalid_shrinkage(self, make_system):
        with pytest.raises(EstimationError):
            gradient_boost(make_system(np.eye(2), [1.0, 1.0]), nu=1.5)


class TestBaggingVarianceReduction:
    def test_bagging_smooths_a_binding_bound(self, make_system):
        rng = np.random.default_rng(21)
        n = 20
        X = np.ones((n, 1))
        g = np.linspace(0.5, 3.0, n)
        base = make_system(X, np.zeros(n), lower=[0.0], upper=[np.inf])

        single, bagged = [], []
        for run in range(200):
            system = base.with_response(np.sqrt(g) * rng.standard_normal(n))
            reference = fit_fgls(system, NoiseKind.HC4, 1)
            cfg = BootstrapConfig(replicates=50, seed=run)
            responses = wild_bootstrap(system, reference.beta_hat, reference.noise, cfg)
            members = refit_members(system, responses, NoiseKind.HC4, 1)
            single.append(reference.beta_hat)
            bagged.append(bagging(members, system).beta_hat)

        assert np.trace(np.atleast_2d(np.cov(np.array(bagged).T))) <= np.trace(np.atleast_2d(np.cov(np.array(single).T)))
