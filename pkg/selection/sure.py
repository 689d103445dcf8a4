"""
Finite-difference Monte-Carlo SURE for the irMxNE estimator.

    SURE(λ) = ||M - G X^(λ,1)||_F^2 - N T σ^2 + 2 σ^2 dof
    dof     = <G (X^(λ,2) - X^(λ,1)), Δ> / ε

where X^(λ,2) is fitted on M + εΔ with Δ i.i.d. standard normal and
ε = 2σ / N^0.3. The probe is drawn once per selection and shared by every grid
point so that the curve is comparable along λ.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from solvers.errors import NumericalError, SelectionError
from solvers.irmxne import ReweightConfig, irmxne_solve
from solvers.mxne import SolveReport
from solvers.path import LambdaGrid, solve_path_warm
from solvers.problem import BlockDesign, Measurements, SourceEstimate

logger = logging.getLogger(__name__)

FitFn = Callable[[BlockDesign, Measurements, float], SolveReport]


@dataclass(frozen=True, eq=False)
class ProbeState:
    delta: np.ndarray
    eps_fd: float
    seed: int
    index: int = 0

    @classmethod
    def draw(cls, shape: Tuple[int, int], sigma: float, seed: int, index: int = 0) -> "ProbeState":
        rng = np.random.default_rng([seed, index])
        return cls(rng.standard_normal(shape), fd_step(sigma, shape[0]), seed, index)

    def digest(self) -> str:
        return hashlib.sha256(self.delta.tobytes()).hexdigest()


@dataclass(frozen=True)
class SureEval:
    lam: float
    sure: float
    dof: float
    residual_energy: float
    estimate: SourceEstimate
    valid: bool = True


def fd_step(sigma: float, n_sensors: int) -> float:
    if not sigma > 0 or n_sensors < 1:
        raise ValueError(f"need sigma > 0 and N >= 1, got sigma={sigma}, N={n_sensors}")
    return 2.0 * sigma / n_sensors ** 0.3


def sure_value(residual_energy: float, dof: float, n_sensors: int, n_times: int, sigma: float) -> float:
    return residual_energy - n_sensors * n_times * sigma ** 2 + 2.0 * sigma ** 2 * dof


def _dof(design: BlockDesign, X1: np.ndarray, X2: np.ndarray, probe: ProbeState) -> float:
    return float(np.sum((design.G @ (X2 - X1)) * probe.delta)) / probe.eps_fd


def _evaluate(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    base: SolveReport,
    perturbed: Sequence[SolveReport],
    probes: Sequence[ProbeState],
) -> SureEval:
    X1 = base.estimate.X
    R = meas.M - design.G @ X1
    energy = float(np.sum(R * R))
    dof = float(np.mean([_dof(design, X1, p.estimate.X, probe) for p, probe in zip(perturbed, probes)]))
    valid = base.ok and all(p.ok for p in perturbed)
    sure = sure_value(energy, dof, meas.n_sensors, meas.n_times, meas.sigma)
    return SureEval(lam=lam, sure=sure, dof=dof, residual_energy=energy, estimate=base.estimate, valid=valid)


def fdmc_sure(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    probe: ProbeState,
    config: Optional[ReweightConfig] = None,
    fit: Optional[FitFn] = None,
) -> SureEval:
    """SURE at a single λ; `fit` replaces the irMxNE solver (defaults to irmxne_solve)."""
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if probe.delta.shape != meas.M.shape:
        raise ValueError(f"probe shape {probe.delta.shape} does not match M {meas.M.shape}")
    config = config or ReweightConfig()
    if fit is None:
        def fit(d: BlockDesign, m: Measurements, l: float) -> SolveReport:
            return irmxne_solve(d, m, l, config)

    try:
        base = fit(design, meas, lam)
        perturbed = fit(design, meas.perturbed(probe.delta, probe.eps_fd), lam)
    except NumericalError as exc:
        logger.warning("[SURE] solve failed lam=%.4g error=%s", lam, exc)
        zero = SourceEstimate.zeros(design.n_columns, meas.n_times, design.n_orient)
        return SureEval(lam=lam, sure=np.nan, dof=np.nan, residual_energy=np.nan, estimate=zero, valid=False)
    return _evaluate(design, meas, lam, base, [perturbed], [probe])


def select_lambda_sure(
    design: BlockDesign,
    meas: Measurements,
    grid: LambdaGrid,
    config: Optional[ReweightConfig] = None,
    seed: int = 0,
    n_probes: int = 1,
    n_jobs: int = 1,
) -> Tuple[float, List[SureEval]]:
    """Grid search for the λ with the smallest SURE; ties go to the larger λ."""
    config = config or ReweightConfig()
    if n_probes < 1:
        raise ValueError(f"n_probes must be >= 1, got {n_probes}")
    probes = [ProbeState.draw(meas.M.shape, meas.sigma, seed, r) for r in range(n_probes)]

    base_path = solve_path_warm(design, meas, grid, config, n_jobs=n_jobs)
    perturbed_paths = [
        solve_path_warm(design, meas.perturbed(probe.delta, probe.eps_fd), grid, config, n_jobs=n_jobs)
        for probe in probes
    ]

    evals = [
        _evaluate(design, meas, lam, base_path[i], [path[i] for path in perturbed_paths], probes)
        for i, lam in enumerate(grid)
    ]
    for ev in evals:
        logger.debug("[SURE] lam=%.4g sure=%.6g dof=%.3f valid=%s", ev.lam, ev.sure, ev.dof, ev.valid)

    scores = np.array([ev.sure if ev.valid else np.inf for ev in evals])
    if not np.isfinite(scores).any():
        raise SelectionError("SURE is invalid at every grid point")
    best = int(np.argmin(scores))
    logger.info("[SURE] lam_opt=%.4g index=%d sure=%.6g dof=%.3f", evals[best].lam, best, evals[best].sure, evals[best].dof)
    return evals[best].lam, evals
