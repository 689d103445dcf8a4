import sys
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from solvers.mxne import duality_gap
from solvers.problem import BlockDesign, Measurements


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_instance(seed, n_sensors=20, n_sources=30, n_orient=3, n_times=5, n_active=3, noise=0.1):
    """Gaussian design with a few planted blocks, plus light noise."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n_sensors, n_sources * n_orient))
    X = np.zeros((n_sources * n_orient, n_times))
    for s in rng.choice(n_sources, size=n_active, replace=False):
        X[s * n_orient:(s + 1) * n_orient] = rng.standard_normal((n_orient, n_times))
    M = G @ X + noise * rng.standard_normal((n_sensors, n_times))
    positions = rng.uniform(-50.0, 50.0, size=(n_sources, 3))
    return BlockDesign(G, n_orient, positions), Measurements(M), X


def prox_grad_oracle(design, meas, lam, rel_gap=1e-11, max_iter=200000):
    """FISTA on the MxNE objective with a global step 1/||G||_2^2."""
    G, M, O = design.G, meas.M, design.n_orient
    step = 1.0 / np.linalg.norm(G, 2) ** 2
    target = rel_gap * 0.5 * float(np.sum(M * M))

    def prox(Z):
        blocks = Z.reshape(design.n_sources, O * Z.shape[1])
        norms = np.linalg.norm(blocks, axis=1, keepdims=True)
        scale = np.maximum(0.0, 1.0 - step * lam / np.maximum(norms, 1e-300))
        return (blocks * scale).reshape(Z.shape)

    X = np.zeros((design.n_columns, meas.n_times))
    Y, t = X.copy(), 1.0
    for it in range(max_iter):
        X_new = prox(Y - step * G.T @ (G @ Y - M))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = X_new + (t - 1.0) / t_new * (X_new - X)
        X, t = X_new, t_new
        if it % 50 == 0 and duality_gap(design, meas, lam, X) <= target:
            break
    return X


@pytest.fixture
def instance():
    return random_instance(0)
