"""
Regularization selection strategies (SURE, spatial CV, λ-MAP) behind one entry point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from selection.cv import make_folds, select_lambda_cv
from selection.lmap import LmapConfig, select_lambda_map
from selection.sure import select_lambda_sure
from solvers.errors import SelectionError
from solvers.irmxne import ReweightConfig, irmxne_solve
from solvers.path import make_grid
from solvers.problem import BlockDesign, Measurements, SourceEstimate, explained_variance, lambda_max

logger = logging.getLogger(__name__)

METHODS = ("sure", "cv", "lmap")


@dataclass
class SelectionResult:
    method: str
    lam: float
    lambda_max: float
    grid: List[float]
    criterion: List[float]
    estimate: SourceEstimate
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    path_estimates: Optional[List[SourceEstimate]] = None

    @property
    def lambda_ratio(self) -> float:
        return self.lam / self.lambda_max if self.lambda_max > 0 else float("nan")

    def summary(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "lambda": self.lam,
            "lambda_max": self.lambda_max,
            "lambda_ratio": self.lambda_ratio,
            "grid": self.grid,
            "criterion": self.criterion,
            "n_sources": self.estimate.n_active,
            "active_set": self.estimate.active_set.tolist(),
            "diagnostics": self.diagnostics,
        }


def run_selection(
    method: str,
    design: BlockDesign,
    meas: Measurements,
    reweight: Optional[ReweightConfig] = None,
    grid_n: int = 20,
    grid_ratio_min: float = 0.1,
    seed: int = 0,
    n_probes: int = 1,
    n_folds: int = 5,
    lmap: Optional[LmapConfig] = None,
    n_jobs: int = 1,
) -> SelectionResult:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    reweight = reweight or ReweightConfig()
    lmax = lambda_max(design, meas)
    if lmax == 0.0:
        raise SelectionError("lambda_max is 0: every λ selects the empty model")

    if method == "lmap":
        lmap = lmap or LmapConfig(reweight=reweight)
        res = select_lambda_map(design, meas, lmap)
        diagnostics = {
            "alpha": res.alpha,
            "beta": res.beta,
            "converged": res.converged,
            "over_lambda_max": res.over_lambda_max,
            "explained_variance": explained_variance(design, meas, res.estimate.X),
        }
        return SelectionResult("lmap", res.lam, lmax, [], res.trace, res.estimate, diagnostics)

    grid = make_grid(lmax, grid_n, grid_ratio_min)

    if method == "sure":
        lam, evals = select_lambda_sure(design, meas, grid, reweight, seed=seed, n_probes=n_probes, n_jobs=n_jobs)
        best = next(ev for ev in evals if ev.lam == lam)
        diagnostics = {
            "seed": seed,
            "n_probes": n_probes,
            "dof": [ev.dof for ev in evals],
            "residual_energy": [ev.residual_energy for ev in evals],
            "n_active": [ev.estimate.n_active for ev in evals],
            "valid": [ev.valid for ev in evals],
            "explained_variance": explained_variance(design, meas, best.estimate.X),
        }
        return SelectionResult(
            "sure", lam, lmax, grid.values.tolist(), [ev.sure for ev in evals], best.estimate, diagnostics,
            path_estimates=[ev.estimate for ev in evals],
        )

    plan = make_folds(meas.n_sensors, n_folds, seed)
    lam, errors = select_lambda_cv(design, meas, grid, plan, reweight, n_jobs=n_jobs)
    # refit on every sensor at the selected λ
    refit = irmxne_solve(design, meas, lam, reweight)
    estimate = refit.estimate
    diagnostics = {
        "seed": seed,
        "n_folds": n_folds,
        "converged": refit.converged,
        "explained_variance": explained_variance(design, meas, estimate.X),
    }
    return SelectionResult("cv", lam, lmax, grid.values.tolist(), errors.tolist(), estimate, diagnostics)
