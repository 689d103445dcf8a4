import numpy as np
import pytest

from conftest import random_instance
from solvers.errors import ShapeError, UndefinedInputError
from solvers.problem import (
    BlockDesign,
    Measurements,
    SourceEstimate,
    block_norms,
    block_soft_threshold,
    explained_variance,
    lambda_max,
    objective_irmxne,
    objective_mxne,
)


def _identity_design(n):
    return BlockDesign(np.eye(n), 1, np.zeros((n, 3)))


def test_block_norms_examples():
    assert np.array_equal(block_norms(np.zeros((6, 4)), 3), np.zeros(2))
    assert block_norms(np.array([[3.0], [4.0], [0.0]]), 3).tolist() == [5.0]

    X = np.random.default_rng(1).standard_normal((9, 7))
    np.testing.assert_allclose(block_norms(X[:, ::-1], 3), block_norms(X, 3))


def test_block_norms_rejects_partial_block():
    with pytest.raises(ShapeError):
        block_norms(np.zeros((7, 2)), 3)


def test_design_validates_structure():
    with pytest.raises(ShapeError):
        BlockDesign(np.zeros((4, 5)), 3, np.zeros((1, 3)))
    with pytest.raises(ShapeError):
        BlockDesign(np.zeros((4, 6)), 3, np.zeros((3, 3)))
    G = np.zeros((4, 6))
    G[0, 0] = np.nan
    with pytest.raises(ShapeError):
        BlockDesign(G, 3, np.zeros((2, 3)))

    design = BlockDesign(np.arange(24.0).reshape(4, 6), 3, np.zeros((2, 3)))
    assert (design.n_sensors, design.n_columns, design.n_sources) == (4, 6, 2)
    assert np.array_equal(design.block(1), design.G[:, 3:6])


def test_measurements_validate():
    assert Measurements(np.ones(4)).M.shape == (4, 1)
    with pytest.raises(ValueError):
        Measurements(np.ones((4, 2)), sigma=0.0)
    with pytest.raises(ShapeError):
        Measurements(np.full((2, 2), np.inf))


def test_lambda_max_examples():
    design = _identity_design(2)
    assert lambda_max(design, Measurements(np.zeros((2, 1)))) == 0.0
    assert lambda_max(design, Measurements(np.array([[3.0], [4.0]]))) == 4.0

    design, meas, _ = random_instance(3)
    scaled = Measurements(2.5 * meas.M)
    assert lambda_max(design, scaled) == pytest.approx(2.5 * lambda_max(design, meas), rel=1e-12)


def test_lambda_max_shape_mismatch():
    with pytest.raises(ShapeError):
        lambda_max(_identity_design(3), Measurements(np.ones((2, 1))))


def test_objective_mxne():
    design, meas, _ = random_instance(4)
    zero = np.zeros((design.n_columns, meas.n_times))
    assert objective_mxne(design, meas, zero, 1.3) == pytest.approx(0.5 * np.sum(meas.M ** 2))

    X = np.random.default_rng(5).standard_normal(zero.shape)
    R = meas.M - design.G @ X
    norms = [np.linalg.norm(X[3 * s:3 * s + 3]) for s in range(design.n_sources)]
    expected = 0.5 * np.sum(R ** 2) + 0.7 * np.sum(norms)
    assert objective_mxne(design, meas, X, 0.7) == pytest.approx(expected, rel=1e-12)
    assert objective_mxne(design, meas, X, 0.0) == pytest.approx(0.5 * np.sum(R ** 2), rel=1e-12)


def test_objective_perfect_fit():
    design = _identity_design(3)
    M = np.array([[1.0], [2.0], [3.0]])
    assert objective_mxne(design, Measurements(M), M, 0.0) == 0.0


def test_objective_irmxne():
    design = BlockDesign(np.eye(4)[:, :4], 4, np.zeros((1, 3)))
    X = np.array([[4.0], [0.0], [0.0], [0.0]])
    meas = Measurements(design.G @ X)
    assert objective_irmxne(design, meas, X, 1.0) == pytest.approx(2.0)

    design, meas, _ = random_instance(6, n_orient=1, n_times=1)
    X = np.zeros((design.n_columns, 1))
    X[[0, 5, 9], 0] = [1.0, -1.0, 1.0]
    assert objective_irmxne(design, meas, X, 0.4) == pytest.approx(objective_mxne(design, meas, X, 0.4))


def test_explained_variance():
    design = _identity_design(2)
    M = np.array([[3.0], [4.0]])
    meas = Measurements(M)
    assert explained_variance(design, meas, np.zeros((2, 1))) == 0.0
    assert explained_variance(design, meas, M) == 1.0
    # residual (0, 2.5): 6.25 / 25
    assert explained_variance(design, meas, np.array([[3.0], [1.5]])) == pytest.approx(0.75)
    with pytest.raises(UndefinedInputError):
        explained_variance(design, Measurements(np.zeros((2, 1))), np.zeros((2, 1)))


def test_block_soft_threshold_examples():
    Y = np.array([[3.0], [4.0]])
    assert np.array_equal(block_soft_threshold(Y, 5.0), np.zeros_like(Y))
    assert np.array_equal(block_soft_threshold(Y, 0.0), Y)
    np.testing.assert_allclose(block_soft_threshold(Y, 2.5), [[1.5], [2.0]])
    with pytest.raises(ValueError):
        block_soft_threshold(Y, -1.0)


def test_block_soft_threshold_matches_line_search():
    # the prox of tau*||.|| keeps the direction of Y, so a 1-D search over the scale suffices
    rng = np.random.default_rng(7)
    Y = rng.standard_normal((3, 4))
    tau = 0.6 * np.linalg.norm(Y)
    scales = np.linspace(0.0, 1.0, 200001)
    values = 0.5 * (1 - scales) ** 2 * np.sum(Y ** 2) + tau * scales * np.linalg.norm(Y)
    best = scales[np.argmin(values)]
    np.testing.assert_allclose(block_soft_threshold(Y, tau), best * Y, atol=1e-4)


def test_block_soft_threshold_non_expansive():
    rng = np.random.default_rng(8)
    for _ in range(200):
        Y1, Y2 = rng.standard_normal((2, 3, 5))
        tau = rng.uniform(0.0, 4.0)
        lhs = np.linalg.norm(block_soft_threshold(Y1, tau) - block_soft_threshold(Y2, tau))
        assert lhs <= np.linalg.norm(Y1 - Y2) + 1e-12


def test_active_set_matches_block_norms():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((12, 3))
    X[3:6] = 0.0
    X[9:12] = 0.0
    est = SourceEstimate(X, 3)
    assert est.active_set.tolist() == [0, 2]
    assert np.array_equal(est.active_set, np.flatnonzero(block_norms(est.X, 3)))
    assert SourceEstimate.zeros(6, 2, 3).n_active == 0
