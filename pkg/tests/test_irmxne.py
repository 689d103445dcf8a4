import logging

import numpy as np
import pytest

from conftest import random_instance
from solvers.irmxne import ReweightConfig, irmxne_solve, reweight, reweighted_iterations
from solvers.mxne import SolverConfig, mxne_solve
from solvers.problem import block_norms, lambda_max, objective_mxne


def test_reweight_examples():
    np.testing.assert_allclose(reweight(np.zeros(4), 1e-8), np.full(4, 2e-4))
    assert reweight(np.array([4.0]), 1e-300)[0] == pytest.approx(4.0)
    w = reweight(np.array([3.0, 6.0]), 1e-300)
    assert w[1] / w[0] == pytest.approx(np.sqrt(2.0))
    assert (np.diff(reweight(np.linspace(0.0, 5.0, 11), 1e-8)) > 0).all()


def test_config_validation():
    with pytest.raises(ValueError):
        ReweightConfig(n_iter=0)
    with pytest.raises(ValueError):
        ReweightConfig(eps=0.0)


def test_single_iteration_is_mxne():
    design, meas, _ = random_instance(0)
    lam = 0.2 * lambda_max(design, meas)
    ir = irmxne_solve(design, meas, lam, ReweightConfig(n_iter=1))
    plain = mxne_solve(design, meas, lam)
    assert np.array_equal(ir.estimate.X, plain.estimate.X)
    assert ir.sweeps == plain.sweeps


def test_above_lambda_max_stays_zero():
    design, meas, _ = random_instance(1)
    report = irmxne_solve(design, meas, 1.01 * lambda_max(design, meas))
    assert not report.estimate.X.any()
    assert report.converged


def test_majorize_minimize_descent_suite():
    config = ReweightConfig(n_iter=5)
    for seed in range(50):
        design, meas, _ = random_instance(seed)
        lam = 0.2 * lambda_max(design, meas)
        report = irmxne_solve(design, meas, lam, config)
        history = np.array(report.history)
        assert 2 <= len(history) <= 5
        assert (np.diff(history) <= 100 * report.tol).all()
        assert history[-1] <= history[0] + 10 * report.tol
        assert len(report.supports) == len(history)


def test_support_growth_is_logged(caplog):
    caplog.set_level(logging.WARNING, logger="solvers.irmxne")
    for seed in range(20):
        caplog.clear()
        design, meas, _ = random_instance(seed)
        report = irmxne_solve(design, meas, 0.15 * lambda_max(design, meas))
        grew = any(
            np.setdiff1d(b, a).size for a, b in zip(report.supports[:-1], report.supports[1:])
        )
        logged = any("[IRMXNE] support grew" in r.getMessage() for r in caplog.records)
        assert grew == logged


def test_weighted_design_substitution_identity():
    design, meas, _ = random_instance(2)
    rng = np.random.default_rng(2)
    weights = rng.uniform(0.3, 3.0, design.n_sources)
    Xt = rng.standard_normal((design.n_columns, meas.n_times))
    X = Xt * np.repeat(weights, design.n_orient)[:, None]
    lam = 0.7

    weighted = objective_mxne(design.reweighted(weights), meas, Xt, lam)
    R = meas.M - design.G @ X
    direct = 0.5 * np.sum(R ** 2) + lam * np.sum(block_norms(X, design.n_orient) / weights)
    assert weighted == pytest.approx(direct, rel=1e-12)


def test_reweighted_iterations_start_fresh_history():
    design, meas, _ = random_instance(3)
    lam = 0.2 * lambda_max(design, meas)
    start = mxne_solve(design, meas, lam, config=SolverConfig(track_objective=True))
    report = reweighted_iterations(design, meas, lam, start, 2, ReweightConfig())
    assert len(report.history) <= 3
    assert np.array_equal(report.supports[0], start.estimate.active_set)
    assert report.sweeps >= start.sweeps


def test_deterministic():
    design, meas, _ = random_instance(4)
    lam = 0.2 * lambda_max(design, meas)
    a = irmxne_solve(design, meas, lam)
    b = irmxne_solve(design, meas, lam)
    assert np.array_equal(a.estimate.X, b.estimate.X)
    assert a.history == b.history
