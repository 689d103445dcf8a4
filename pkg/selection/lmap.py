"""
λ-MAP: fixed-point update of λ under a Gamma hyperprior (shape α, scale β).

    λ_max = max_s ||G_s^T M||_F,  m = λ_max / 2,  α = m β + 1
    λ^(i) = (2 S T + α - 1) / (sum_s sqrt(||X_s||_F) + β)

with X the irMxNE solution at λ^(i-1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from solvers.irmxne import ReweightConfig, irmxne_solve
from solvers.problem import BlockDesign, Measurements, SourceEstimate, lambda_max

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LmapConfig:
    beta: float = 10.0
    lambda0: Optional[float] = None
    n_iter: int = 10
    tol_lambda: Optional[float] = None
    reweight: ReweightConfig = field(default_factory=ReweightConfig)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.lambda0 is not None and not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be > 0, got {self.lambda0}")
        if self.tol_lambda is not None and not self.tol_lambda > 0:
            raise ValueError(f"tol_lambda must be > 0, got {self.tol_lambda}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")


@dataclass
class LmapResult:
    lam: float
    trace: List[float]
    estimate: SourceEstimate
    converged: bool
    alpha: float
    beta: float
    lambda_max: float
    over_lambda_max: bool


def lmap_update(n_sources: int, n_times: int, alpha: float, beta: float, norms: np.ndarray) -> float:
    if not alpha > 0 or not beta > 0:
        raise ValueError(f"alpha and beta must be > 0, got alpha={alpha}, beta={beta}")
    penalty = float(np.sqrt(np.asarray(norms, dtype=float)).sum())
    return (2.0 * n_sources * n_times + alpha - 1.0) / (penalty + beta)


def select_lambda_map(design: BlockDesign, meas: Measurements, config: Optional[LmapConfig] = None) -> LmapResult:
    config = config or LmapConfig()
    lmax = lambda_max(design, meas)
    alpha = lmax / 2.0 * config.beta + 1.0
    lam = config.lambda0 if config.lambda0 is not None else lmax / 2.0
    tol = config.tol_lambda if config.tol_lambda is not None else 1e-4 * lmax
    if not lam > 0:
        raise ValueError("lambda_max is 0: M is orthogonal to every source block")

    trace = [lam]
    estimate: Optional[SourceEstimate] = None
    converged = False
    over = False

    for i in range(1, config.n_iter + 1):
        report = irmxne_solve(design, meas, lam, config.reweight, init=estimate)
        estimate = report.estimate
        new_lam = lmap_update(design.n_sources, meas.n_times, alpha, config.beta, estimate.block_norms)
        trace.append(new_lam)
        logger.debug("[LMAP] iter=%d lam=%.6g n_active=%d", i, new_lam, estimate.n_active)
        if new_lam >= lmax:
            over = True
            logger.warning(
                "[LMAP] iterate exceeds lambda_max iter=%d lam=%.6g lambda_max=%.6g beta=%.4g",
                i, new_lam, lmax, config.beta,
            )
        done = abs(new_lam - lam) < tol
        lam = new_lam
        if done:
            converged = True
            break

    if not converged:
        logger.warning("[LMAP] no convergence after n_iter=%d last_step=%.3g", config.n_iter, abs(trace[-1] - trace[-2]))
    logger.info("[LMAP] lam=%.6g ratio=%.4f iters=%d n_active=%d", lam, lam / lmax, len(trace) - 1, estimate.n_active)

    return LmapResult(
        lam=lam,
        trace=trace,
        estimate=estimate,
        converged=converged,
        alpha=alpha,
        beta=config.beta,
        lambda_max=lmax,
        over_lambda_max=over,
    )
