import math

import numpy as np
import pytest

from mixconc import (ABS_HALF, NO_PENALTY, SQUARED, DomainError, LossSpec,
                     PenaltySpec, PopulationDesign, ShapeMismatch,
                     SieveMomentOracle, SingularDesign, SolverOptions,
                     bias_term, delta_p, delta_p_mc, empirical_criterion,
                     fit_ols, fit_penalized, fit_penalized_qr, fit_sieve_ls,
                     np_target, polynomial_basis, pspline_basis,
                     quantile_loss, subgradient_residual)


# -- criterion ------------------------------------------------------------------


def test_criterion_interpolant_zero():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    theta = np.array([2.0, -1.0])
    y = X @ theta
    assert empirical_criterion(SQUARED, NO_PENALTY, (X, y), theta) == 0.0


def test_criterion_hand_value():
    X = np.ones((3, 1))
    y = np.array([1.0, 2.0, 9.0])
    val = empirical_criterion(quantile_loss(0.5), NO_PENALTY, (X, y), [2.0])
    assert val == pytest.approx(4.0 / 3.0)


def test_criterion_penalty_additivity():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    theta = rng.standard_normal(3)
    pen = PenaltySpec("l1", lam=1.0)
    diff = empirical_criterion(quantile_loss(0.3), pen, (X, y), theta) \
        - empirical_criterion(quantile_loss(0.3), NO_PENALTY, (X, y), theta)
    assert diff == pytest.approx(np.abs(theta).sum())


def test_criterion_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        empirical_criterion(SQUARED, NO_PENALTY,
                            (np.ones((3, 2)), np.ones(3)), np.ones(3))


def test_abs_half_equals_median_loss():
    r = np.array([-2.0, 0.0, 3.5])
    assert np.allclose(ABS_HALF.values(r), 0.5 * np.abs(r))
    assert np.allclose(LossSpec("quantile", 0.5).values(r), 0.5 * np.abs(r))


# -- quantile regression solver ---------------------------------------------------


def test_median_matches_grid_oracle():
    X = np.ones((3, 1))
    y = np.array([1.0, 2.0, 9.0])
    fit = fit_penalized_qr((X, y), 0.5)
    grid = np.linspace(0.0, 10.0, 10_001)
    objs = [empirical_criterion(quantile_loss(0.5), NO_PENALTY, (X, y), [t])
            for t in grid]
    assert abs(fit.theta[0] - grid[int(np.argmin(objs))]) <= 1e-3
    assert fit.theta[0] == pytest.approx(2.0, abs=1e-9)
    assert fit.optimality_residual <= 1e-6


def test_l1_large_lambda_zeroes_theta():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 3))
    y = rng.standard_normal(40)
    fit = fit_penalized_qr((X, y), 0.5, PenaltySpec("l1", lam=50.0))
    assert np.allclose(fit.theta, 0.0, atol=1e-8)
    assert fit.optimality_residual <= 1e-6


def test_ridge_path_matches_normal_equations():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 4))
    y = rng.standard_normal(60)
    pen = PenaltySpec("weighted_l2", lam=0.3, m=0.0)
    fit = fit_penalized((X, y), SQUARED, pen,
                        SolverOptions(tol=1e-10, first_sweep=500))
    n = X.shape[0]
    oracle = np.linalg.solve(X.T @ X / n + pen.lam * np.eye(4), X.T @ y / n)
    assert np.linalg.norm(fit.theta - oracle) <= 1e-8


def test_penalized_qr_near_minimizer_contract():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((50, 3))
    y = X @ np.array([1.0, -0.5, 0.2]) + rng.standard_normal(50)
    for pen in (NO_PENALTY, PenaltySpec("l1", lam=0.05),
                PenaltySpec("weighted_l2", lam=0.05, m=1.0)):
        fit = fit_penalized_qr((X, y), 0.3, pen)
        assert fit.optimality_residual <= 1e-6
        loss = quantile_loss(0.3)
        base = empirical_criterion(loss, pen, (X, y), fit.theta)
        for _ in range(40):
            probe = fit.theta + rng.standard_normal(3) * rng.uniform(0, 2)
            assert base <= empirical_criterion(loss, pen, (X, y), probe) + 1e-9


def test_subgradient_residual_detects_suboptimal():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    fit = fit_penalized_qr((X, y), 0.5)
    good = subgradient_residual(X, y, fit.theta, 0.5, NO_PENALTY)
    bad = subgradient_residual(X, y, fit.theta + 0.3, 0.5, NO_PENALTY)
    assert good <= 1e-6 < bad


def test_quantile_tau_off_center():
    rng = np.random.default_rng(5)
    X = np.ones((201, 1))
    y = np.sort(rng.standard_normal(201))
    fit = fit_penalized_qr((X, y), 0.25)
    assert fit.theta[0] == pytest.approx(np.quantile(y, 0.25), abs=1e-6)


# -- least squares ------------------------------------------------------------


def test_ols_orthonormal_formula():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((50, 3))
    S = X.T @ X / 50
    evals, evecs = np.linalg.eigh(S)
    X = X @ evecs @ np.diag(evals ** -0.5) @ evecs.T
    y = rng.standard_normal(50)
    fit = fit_ols((X, y))
    assert np.allclose(fit.theta, X.T @ y / 50, atol=1e-10)


def test_ols_noiseless_recovery():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 4))
    theta = np.array([1.0, -2.0, 0.5, 3.0])
    fit = fit_ols((X, X @ theta))
    assert np.linalg.norm(fit.theta - theta) <= 1e-10


def test_ols_scalar_is_covariance_ratio():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(40)
    y = 2.0 * x + rng.standard_normal(40)
    fit = fit_ols((x[:, None], y))
    assert fit.theta[0] == pytest.approx(np.dot(x, y) / np.dot(x, x))


def test_ols_singular():
    X = np.ones((10, 2))
    with pytest.raises(SingularDesign):
        fit_ols((X, np.ones(10)))


# -- sieve least squares --------------------------------------------------------


def test_sieve_polynomial_line():
    w = np.linspace(-5, 5, 40)
    y = 1.5 - 0.5 * w
    fit = fit_sieve_ls(polynomial_basis(2), w, y)
    assert fit.objective <= 1e-20
    # scaled monomials: function values must match exactly
    assert np.allclose(polynomial_basis(2).design(w) @ fit.theta, y)


def test_sieve_polynomial_exact_recovery():
    rng = np.random.default_rng(9)
    w = rng.uniform(-6, 6, 80)
    y = 0.3 + 0.2 * w - 0.05 * w ** 2 + 0.01 * w ** 3
    for k in (4, 6, 8):
        fit = fit_sieve_ls(polynomial_basis(k), w, y)
        assert np.abs(polynomial_basis(k).design(w) @ fit.theta - y).max() <= 1e-8


def test_sieve_pspline_partition_of_unity():
    rng = np.random.default_rng(10)
    w = rng.uniform(-6, 6, 100)
    for k in (3, 5, 8):
        basis = pspline_basis(k)
        assert np.allclose(basis.design(w).sum(axis=1), 1.0, atol=1e-12)
        fit = fit_sieve_ls(basis, w, np.full(100, 4.2))
        assert np.allclose(basis.design(w) @ fit.theta, 4.2, atol=1e-8)


def test_sieve_normal_equations_residual():
    rng = np.random.default_rng(11)
    w = rng.uniform(-6, 6, 200)
    y = np_target(w) + rng.standard_normal(200)
    fit = fit_sieve_ls(pspline_basis(6), w, y)
    Q = pspline_basis(6).design(w)
    rel = np.linalg.norm(Q.T @ Q @ fit.theta - Q.T @ y) / np.linalg.norm(Q.T @ y)
    assert rel <= 1e-8


# -- population distance and bias ------------------------------------------------


def _design(d=3):
    return PopulationDesign(sigma_x=1.0001 * np.eye(d),
                            noise_var=0.25 * 1.0001)


def test_delta_p_zero_and_unit():
    design = PopulationDesign(sigma_x=np.eye(3), noise_var=1.0)
    theta = np.array([1.0, 2.0, 3.0])
    assert delta_p(design, SQUARED, theta, theta) == 0.0
    e1 = theta + np.array([1.0, 0.0, 0.0])
    assert delta_p(design, SQUARED, e1, theta) == pytest.approx(1.0)
    assert delta_p(design, ABS_HALF, theta, theta) == 0.0


def test_delta_p_median_matches_mc_oracle():
    design = _design()
    truth = np.array([1.0, 2 ** -0.5, 3 ** -0.5])
    theta = truth + np.array([0.15, -0.1, 0.05])

    def sampler(draws, rng):
        X = rng.standard_normal((draws, 3)) * math.sqrt(1.0001)
        U = rng.standard_normal(draws) * math.sqrt(1.0001)
        return X, X @ truth + 0.5 * U

    analytic = delta_p(design, ABS_HALF, theta, truth)
    mc, se = delta_p_mc(sampler, ABS_HALF, theta, truth, draws=1_000_000,
                        seed=56)
    # compare criterion differences (deltas squared) within 3 MC ses
    assert analytic ** 2 == pytest.approx(mc ** 2, abs=3 * se)


def test_bias_term_sieve():
    oracle = SieveMomentOracle("polynomial", np_target)
    # exactly representable target: w is in the k = 2 span
    lin_oracle = SieveMomentOracle("polynomial", lambda w: 0.5 * w)
    assert bias_term(oracle=lin_oracle, k=2) <= 1e-6  # sqrt of cancellation noise
    vals = [bias_term(oracle=oracle, k=k) for k in range(3, 9)]
    # non-increasing, strictly smaller whenever an even power enters
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[2] < vals[1] * 0.5   # k=5 adds w^4
    assert vals[4] < vals[3] * 0.5   # k=7 adds w^6
    # parity: odd powers add nothing against a symmetric weight
    assert vals[1] == pytest.approx(vals[0], rel=1e-9)
    assert vals[3] == pytest.approx(vals[2], rel=1e-9)


def test_bias_term_penalty():
    pen = PenaltySpec("l1", lam=0.2)
    theta = np.array([1.0, -2.0, 0.5])
    assert bias_term(pen=pen, theta_star=theta) == pytest.approx(0.2 * 3.5)
    assert math.sqrt(bias_term(pen=pen, theta_star=theta)) == \
        pytest.approx(math.sqrt(0.2 * np.abs(theta).sum()))
    with pytest.raises(DomainError):
        bias_term(pen=pen)


def test_pspline_bias_nonmonotone_flagged():
    oracle = SieveMomentOracle("pspline", np_target)
    vals, monotone = oracle.bias_curve(range(3, 9))
    assert not monotone          # spline spaces are not nested
    assert vals[3] > vals[2]     # k=6 above k=5


def test_oracle_backends_agree():
    quad = SieveMomentOracle("polynomial", np_target)
    mc = SieveMomentOracle("polynomial", np_target, method="mc",
                           mc_draws=2_000_000, seed=99)
    for k in (3, 5, 7):
        assert mc.bias(k) == pytest.approx(quad.bias(k), rel=2e-2, abs=2e-3)
    assert mc.t2 == pytest.approx(quad.t2, rel=5e-3)
