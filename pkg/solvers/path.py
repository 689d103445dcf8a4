"""
Regularization grids and the warm-started irMxNE path.

Phase 1 solves the plain MxNE problems from the largest λ down, each one
warm-started from its neighbour. Phase 2 runs the remaining K-1 reweighted
iterations independently per grid point, starting from that point's phase-1
solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed

from solvers.errors import NumericalError
from solvers.irmxne import ReweightConfig, reweighted_iterations
from solvers.mxne import SolveReport, block_lipschitz, column_gram, mxne_solve
from solvers.problem import BlockDesign, Measurements, SourceEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    values: np.ndarray
    ratio_min: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("grid needs at least one value")
        if not (values > 0).all():
            raise ValueError("grid values must be > 0")
        if values.size > 1 and not (np.diff(values) < 0).all():
            raise ValueError("grid values must be strictly decreasing")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.values.tolist())


def make_grid(lambda_max: float, n: int = 20, ratio_min: float = 0.1) -> LambdaGrid:
    """Geometric grid from lambda_max down to ratio_min * lambda_max."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < ratio_min < 1:
        raise ValueError(f"ratio_min must be in (0, 1), got {ratio_min}")
    if not lambda_max > 0:
        raise ValueError(f"lambda_max must be > 0 to build a grid, got {lambda_max}")
    if n == 1:
        return LambdaGrid(np.array([float(lambda_max)]), ratio_min)
    return LambdaGrid(np.geomspace(lambda_max, ratio_min * lambda_max, n), ratio_min)


def _failed(previous: SourceEstimate, exc: Exception) -> SolveReport:
    return SolveReport(estimate=previous, gap=np.inf, sweeps=0, converged=False, tol=np.nan, error=str(exc))


def _reweight_point(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    start: SolveReport,
    config: ReweightConfig,
    lipschitz: np.ndarray,
    gram: Optional[np.ndarray],
) -> SolveReport:
    if start.error is not None or config.n_iter == 1:
        return start
    try:
        return reweighted_iterations(design, meas, lam, start, config.n_iter - 1, config, lipschitz, gram)
    except NumericalError as exc:
        logger.warning("[PATH] reweighting failed lam=%.4g error=%s", lam, exc)
        return _failed(start.estimate, exc)


def solve_path_warm(
    design: BlockDesign,
    meas: Measurements,
    grid: LambdaGrid,
    config: Optional[ReweightConfig] = None,
    n_jobs: int = 1,
) -> List[SolveReport]:
    config = config or ReweightConfig()
    lipschitz = block_lipschitz(design)
    gram = column_gram(design)

    first: List[SolveReport] = []
    previous = SourceEstimate.zeros(design.n_columns, meas.n_times, design.n_orient)
    for lam in grid:
        try:
            report = mxne_solve(design, meas, lam, init=previous, config=config.inner, lipschitz=lipschitz, gram=gram)
            previous = report.estimate
        except NumericalError as exc:
            logger.warning("[PATH] MxNE failed lam=%.4g error=%s", lam, exc)
            report = _failed(previous, exc)
        first.append(report)

    if n_jobs == 1:
        reports = [
            _reweight_point(design, meas, lam, start, config, lipschitz, gram) for lam, start in zip(grid, first)
        ]
    else:
        reports = Parallel(n_jobs=n_jobs)(
            delayed(_reweight_point)(design, meas, lam, start, config, lipschitz, gram) for lam, start in zip(grid, first)
        )

    logger.info(
        "[PATH] n_lambda=%d sweeps=%d failed=%d",
        grid.n, sum(r.sweeps for r in reports), sum(not r.ok for r in reports),
    )
    return list(reports)
