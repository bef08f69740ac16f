import numpy as np
import pytest

from segreg.core.model import Dataset, Interval, segment_loss
from segreg.exceptions import SolverError
from segreg.models.lasso import (
    FLAG_MAX_SWEEPS,
    FLAG_NON_UNIQUE,
    FLAG_ZERO_VARIANCE,
    _soft_threshold,
    interval_fit,
    kkt_gap,
    lasso_objective,
    lasso_solve,
    penalty_scale,
)


def proximal_gradient(x, y, weight, iters=200_000, tol=1e-14, divisor=None):
    """Plain ISTA on ||y - X b||^2 / m + weight ||b||_1; m defaults to the row count."""
    m = x.shape[0] if divisor is None else divisor
    step = m / (2.0 * np.linalg.norm(x, 2) ** 2)
    beta = np.zeros(x.shape[1])
    for _ in range(iters):
        grad = -2.0 * x.T @ (y - x @ beta) / m
        z = beta - step * grad
        new = np.sign(z) * np.maximum(np.abs(z) - step * weight, 0.0)
        if np.max(np.abs(new - beta)) < tol:
            return new
        beta = new
    return beta


def random_problem(seed, m=40, p=6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((m, p))
    beta = np.zeros(p)
    beta[:2] = (1.5, -1.0)
    y = x @ beta + 0.5 * rng.standard_normal(m)
    return x, y


def test_soft_threshold():
    assert _soft_threshold(3.0, 1.0) == 2.0
    assert _soft_threshold(-3.0, 1.0) == -2.0
    assert _soft_threshold(0.5, 1.0) == 0.0
    assert _soft_threshold(-1.0, 1.0) == 0.0


def test_penalty_scale_floors_width_at_delta():
    assert penalty_scale(1.0, 0.04, 0.25) == 2.0
    assert penalty_scale(1.0, 1.0, 0.25) == 1.0


def test_large_weight_gives_exact_zero():
    x, y = random_problem(0)
    m = x.shape[0]
    weight = 2.0 * np.max(np.abs(x.T @ y)) / m
    result = lasso_solve(x, y, weight)
    assert result.converged
    assert not result.beta.any()


def test_zero_weight_matches_least_squares():
    x, y = random_problem(1, m=100, p=5)
    result = lasso_solve(x, y, 0.0, tol=1e-12)
    expected, *_ = np.linalg.lstsq(x, y, rcond=None)
    assert result.converged
    np.testing.assert_allclose(result.beta, expected, atol=1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matches_proximal_gradient_reference(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((30, 2))
    y = x @ np.array([1.0, -0.5]) + rng.standard_normal(30)
    weight = 0.3
    result = lasso_solve(x, y, weight, tol=1e-12)
    reference = proximal_gradient(x, y, weight)
    assert lasso_objective(x, y, result.beta, weight) == pytest.approx(
        lasso_objective(x, y, reference, weight), abs=1e-8
    )


@pytest.mark.parametrize("seed", [3, 4])
def test_matches_sklearn(seed):
    linear_model = pytest.importorskip("sklearn.linear_model")
    x, y = random_problem(seed, m=60, p=8)
    weight = 0.2
    result = lasso_solve(x, y, weight, tol=1e-12)
    # sklearn minimises ||y - X b||^2 / (2m) + alpha ||b||_1
    model = linear_model.Lasso(alpha=weight / 2, fit_intercept=False, tol=1e-12, max_iter=1_000_000)
    model.fit(x, y)
    np.testing.assert_allclose(result.beta, model.coef_, atol=1e-6)


def test_warm_start_reaches_same_point():
    x, y = random_problem(5)
    cold = lasso_solve(x, y, 0.1, tol=1e-12)
    warm = lasso_solve(x, y, 0.1, tol=1e-12, beta0=np.ones(x.shape[1]))
    np.testing.assert_allclose(cold.beta, warm.beta, atol=1e-9)


def test_monotone_check_passes():
    x, y = random_problem(6)
    result = lasso_solve(x, y, 0.05, check_monotone=True)
    assert result.converged


def test_sweep_budget_is_reported():
    x, y = random_problem(7)
    result = lasso_solve(x, y, 0.01, max_sweeps=1)
    assert not result.converged
    assert FLAG_MAX_SWEEPS in result.flags


def test_degenerate_flags():
    x = np.array([[1.0, 0.0, 2.0], [2.0, 0.0, 1.0]])
    y = np.array([1.0, 2.0])
    result = lasso_solve(x, y, 0.0)
    assert FLAG_ZERO_VARIANCE in result.flags
    assert FLAG_NON_UNIQUE in result.flags
    assert result.beta[1] == 0.0


def test_input_validation():
    with pytest.raises(ValueError):
        lasso_solve(np.ones((3, 2)), np.ones(4), 0.1)
    with pytest.raises(ValueError):
        lasso_solve(np.ones((3, 2)), np.ones(3), 0.1, beta0=np.zeros(3))
    with pytest.raises(ValueError):
        lasso_solve(np.ones((3, 2)), np.ones(3), -0.1)


def test_kkt_gap_closed_form_orthogonal_design():
    # X^T X = 2 I, so one coordinate pass is exact: b = soft(x^T y, 2 lam) / 2
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    y = np.array([3.0, -1.0, 1.0, 0.5])
    data = Dataset(y=y, x=x)
    iv = Interval(0, 4, 4)
    fit = interval_fit(data, iv, lam=0.5, delta=0.25)
    np.testing.assert_array_equal(fit.beta, [1.5, 0.0])
    assert fit.kkt_gap <= 1e-12
    assert kkt_gap(data, iv, fit.beta, 0.5, 0.25) <= 1e-12


def test_kkt_gap_detects_non_optimal_point():
    x, y = random_problem(8)
    data = Dataset(y=y, x=x)
    iv = Interval(0, data.n, data.n)
    assert kkt_gap(data, iv, np.zeros(data.p), 0.01, 0.25) > 0.1


def test_interval_fit_certificate_on_sub_intervals():
    x, y = random_problem(9, m=40, p=10)
    data = Dataset(y=y, x=x)
    for lo, hi in [(0, 10), (10, 40), (5, 25), (0, 40)]:
        fit = interval_fit(data, Interval(lo, hi, data.n), lam=0.2, delta=0.25)
        assert fit.kkt_gap <= 1e-6
        assert fit.converged
        assert not fit.beta.flags.writeable
        assert fit.penalty_scale == penalty_scale(0.2, (hi - lo) / 40, 0.25)


def test_interval_fit_raises_on_sweep_budget():
    x, y = random_problem(10)
    data = Dataset(y=y, x=x)
    with pytest.raises(SolverError, match="did not converge"):
        interval_fit(data, Interval(0, data.n, data.n), lam=0.01, delta=0.25, max_sweeps=1)


@pytest.mark.parametrize("lo, hi", [(10, 40), (0, 20), (30, 35)])
def test_interval_fit_minimises_total_n_objective(lo, hi):
    # ||Y_iv - X_iv b||^2 / n + lam * (v-u) / sqrt(max(v-u, delta)) * ||b||_1,
    # i.e. lam * sqrt(v-u) * ||b||_1 once v-u >= delta
    x, y = random_problem(11, m=40, p=5)
    data = Dataset(y=y, x=x)
    lam, delta = 0.15, 0.25
    iv = Interval(lo, hi, data.n)
    fit = interval_fit(data, iv, lam=lam, delta=delta, tol=1e-12)
    weight = lam * iv.width / np.sqrt(max(iv.width, delta))

    def total(beta):
        return segment_loss(data, iv, beta) + weight * np.abs(beta).sum()

    reference = proximal_gradient(x[lo:hi], y[lo:hi], weight, divisor=data.n)
    assert abs(total(fit.beta) - total(reference)) <= 1e-10
    assert fit.loss == segment_loss(data, iv, fit.beta)


@pytest.mark.slow
def test_interval_fit_approaches_population_mix():
    from segreg.simulation.models import CovarianceSpec, two_segment_model
    from segreg.simulation.sampler import oracle_beta_star, sample_dataset

    truth = two_segment_model(5, CovarianceSpec(), sigma=0.5)
    data = sample_dataset(truth, 20_000, seed=0)
    iv = Interval.from_fractions(0.25, 0.75, data.n)
    fit = interval_fit(data, iv, lam=1e-4, delta=0.25)
    expected = oracle_beta_star(truth, iv)
    np.testing.assert_allclose(expected, 0.5 * truth.betas0[0] + 0.5 * truth.betas0[1])
    assert np.max(np.abs(fit.beta - expected)) <= 0.05


@pytest.mark.slow
def test_interval_fit_keeps_first_segment_support():
    from segreg.simulation.models import CovarianceSpec, two_segment_model
    from segreg.simulation.sampler import sample_dataset
    from segreg.tuning.metrics import tuning_rule

    n, p, reps = 400, 800, 40
    truth = two_segment_model(p, CovarianceSpec(), sigma=1.0)
    lam, _ = tuning_rule(n, p, 0.25)
    iv = Interval.from_fractions(0.0, 0.5, n)
    kept = 0
    for seed in range(reps):
        fit = interval_fit(sample_dataset(truth, n, seed=seed), iv, lam=lam, delta=0.25)
        kept += {0, 1} <= set(fit.support.tolist())
    assert kept >= 0.95 * reps
