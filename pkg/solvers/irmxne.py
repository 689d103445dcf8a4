"""
Iteratively reweighted MxNE for the non-convex penalty

    min_X  1/2 ||M - G X||_F^2 + lam * sum_s sqrt(||X_s||_F)

Each iteration solves a weighted MxNE on the design G·W and maps back X = W X~.
With w_s = 2 sqrt(||X_s^(k)||_F + eps) the weighted problem is the tangent
majorizer of the sqrt penalty, so the objective cannot increase (up to the
inner tolerance).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from solvers.mxne import SolveReport, SolverConfig, block_lipschitz, column_gram, mxne_solve
from solvers.problem import BlockDesign, Measurements, SourceEstimate, objective_irmxne

logger = logging.getLogger(__name__)

EARLY_STOP_RTOL = 1e-10


@dataclass(frozen=True)
class ReweightConfig:
    n_iter: int = 5
    eps: float = 1e-8
    inner: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.n_iter < 1:
            raise ValueError(f"n_iter (K) must be >= 1, got {self.n_iter}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


def reweight(norms: np.ndarray, eps: float) -> np.ndarray:
    return 2.0 * np.sqrt(np.asarray(norms, dtype=float) + eps)


def reweighted_iterations(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    start: SolveReport,
    n_iter: int,
    config: ReweightConfig,
    lipschitz: Optional[np.ndarray] = None,
    gram: Optional[np.ndarray] = None,
) -> SolveReport:
    """
    Run `n_iter` weighted MxNE solves starting from the estimate in `start`.

    Used both by irmxne_solve (after its plain first iteration) and by the
    warm-started grid path, which supplies its own first-iteration solution.
    """
    if lipschitz is None:
        lipschitz = block_lipschitz(design)
    if gram is None:
        gram = column_gram(design)
    O = design.n_orient

    X = start.estimate.X
    history: List[float] = [objective_irmxne(design, meas, X, lam)]
    supports: List[np.ndarray] = [start.estimate.active_set]
    report = start
    sweeps = start.sweeps
    converged = start.converged

    for k in range(n_iter):
        weights = reweight(report.estimate.block_norms, config.eps)
        w_cols = np.repeat(weights, O)
        weighted = design.reweighted(weights)
        init = SourceEstimate(X / w_cols[:, None], O)
        inner = mxne_solve(
            weighted, meas, lam, init=init, config=config.inner, lipschitz=lipschitz * weights ** 2,
            gram=None if gram is None else gram * np.outer(w_cols, w_cols),
        )
        X = inner.estimate.X * w_cols[:, None]
        estimate = SourceEstimate(X, O)
        sweeps += inner.sweeps
        converged = converged and inner.converged

        objective = objective_irmxne(design, meas, X, lam)
        previous = history[-1]
        history.append(objective)
        supports.append(estimate.active_set)

        grown = np.setdiff1d(supports[-1], supports[-2])
        if grown.size:
            logger.warning("[IRMXNE] support grew lam=%.4g iter=%d new_sources=%s", lam, k + 2, grown.tolist())

        report = SolveReport(
            estimate=estimate,
            gap=inner.gap,
            sweeps=sweeps,
            converged=converged,
            tol=inner.tol,
            history=history,
            supports=supports,
        )

        same_support = np.array_equal(supports[-1], supports[-2])
        if same_support and abs(previous - objective) <= EARLY_STOP_RTOL * max(abs(previous), 1.0):
            logger.debug("[IRMXNE] early stop lam=%.4g iter=%d", lam, k + 2)
            break

    return report


def irmxne_solve(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    config: Optional[ReweightConfig] = None,
    init: Optional[SourceEstimate] = None,
) -> SolveReport:
    config = config or ReweightConfig()
    lipschitz = block_lipschitz(design)
    gram = column_gram(design)
    first = mxne_solve(design, meas, lam, init=init, config=config.inner, lipschitz=lipschitz, gram=gram)
    if config.n_iter == 1:
        return first

    report = reweighted_iterations(design, meas, lam, first, config.n_iter - 1, config, lipschitz, gram)
    logger.debug(
        "[IRMXNE] lam=%.4g iters=%d n_active=%d objective=%.6g",
        lam, len(report.history), report.estimate.n_active, report.history[-1],
    )
    return report
