"""
Spatial K-fold cross-validation: folds partition the sensors (rows of G and M).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import KFold

from solvers.errors import SelectionError
from solvers.irmxne import ReweightConfig
from solvers.path import LambdaGrid, solve_path_warm
from solvers.problem import BlockDesign, Measurements, lambda_max

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    n_folds: int
    assignment: np.ndarray
    seed: int

    def train_rows(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != v)

    def val_rows(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == v)


def make_folds(n_sensors: int, n_folds: int = 5, seed: int = 0) -> FoldPlan:
    if n_folds < 2 or n_folds > n_sensors:
        raise ValueError(f"need 2 <= V <= N, got V={n_folds}, N={n_sensors}")
    assignment = np.empty(n_sensors, dtype=int)
    splitter = KFold(n_splits=n_folds, shuffle=True, random_state=seed)
    for v, (_, val) in enumerate(splitter.split(np.zeros((n_sensors, 1)))):
        assignment[val] = v
    return FoldPlan(n_folds=n_folds, assignment=assignment, seed=seed)


def _fold_errors(
    design: BlockDesign,
    meas: Measurements,
    grid: LambdaGrid,
    plan: FoldPlan,
    v: int,
    config: ReweightConfig,
) -> Optional[np.ndarray]:
    train, val = plan.train_rows(v), plan.val_rows(v)
    design_train, meas_train = design.rows(train), meas.rows(train)
    if lambda_max(design_train, meas_train) == 0.0:
        logger.warning("[CV] fold=%d skipped: lambda_max of the training rows is 0", v)
        return None

    reports = solve_path_warm(design_train, meas_train, grid, config)
    G_val, M_val = design.G[val], meas.M[val]
    errors = np.full(grid.n, np.nan)
    for i, report in enumerate(reports):
        if not report.ok:
            continue
        R = M_val - G_val @ report.estimate.X
        errors[i] = float(np.sum(R * R)) / R.size
    logger.debug("[CV] fold=%d n_val=%d errors=%s", v, val.size, np.round(errors, 6).tolist())
    return errors


def select_lambda_cv(
    design: BlockDesign,
    meas: Measurements,
    grid: LambdaGrid,
    plan: FoldPlan,
    config: Optional[ReweightConfig] = None,
    n_jobs: int = 1,
) -> Tuple[float, np.ndarray]:
    """Return the λ minimizing the fold-averaged per-entry validation error, and that curve."""
    config = config or ReweightConfig()
    if plan.assignment.shape != (meas.n_sensors,):
        raise ValueError(f"fold plan covers {plan.assignment.size} sensors, data has {meas.n_sensors}")

    folds = range(plan.n_folds)
    if n_jobs == 1:
        per_fold: List[Optional[np.ndarray]] = [_fold_errors(design, meas, grid, plan, v, config) for v in folds]
    else:
        per_fold = Parallel(n_jobs=n_jobs)(
            delayed(_fold_errors)(design, meas, grid, plan, v, config) for v in folds
        )

    usable = [e for e in per_fold if e is not None]
    if not usable:
        raise SelectionError("every CV fold was skipped")
    stacked = np.vstack(usable)
    counts = np.isfinite(stacked).sum(axis=0)
    if not counts.any():
        raise SelectionError("no grid point produced a valid fit on any fold")
    mean_errors = np.where(counts > 0, np.nansum(stacked, axis=0) / np.maximum(counts, 1), np.nan)

    best = int(np.nanargmin(mean_errors))
    logger.info("[CV] lam_opt=%.4g index=%d error=%.6g folds=%d", grid.values[best], best, mean_errors[best], len(usable))
    return float(grid.values[best]), mean_errors
