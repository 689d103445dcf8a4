"""
Convex mixed-norm (MxNE / group-Lasso) solver.

    min_X  1/2 ||M - G X||_F^2 + lam * sum_s ||X_s||_F

Block coordinate descent over the source blocks in the fixed order 0..S-1,
stopped on the duality gap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import linalg

from solvers.errors import NumericalError
from solvers.problem import (
    BlockDesign,
    Measurements,
    SourceEstimate,
    _check_shapes,
    block_norms,
    block_soft_threshold,
    objective_mxne,
)

logger = logging.getLogger(__name__)

# above this many columns G^T G is not kept in memory
GRAM_MAX_COLUMNS = 4096


# -----------------------------
# Data models
# -----------------------------

@dataclass(frozen=True)
class SolverConfig:
    tol: Optional[float] = None
    tol_rel: float = 1e-8
    max_iter: int = 3000
    gap_check_every: int = 10
    track_objective: bool = False

    def __post_init__(self) -> None:
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if not self.tol_rel > 0:
            raise ValueError(f"tol_rel must be > 0, got {self.tol_rel}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.gap_check_every < 1:
            raise ValueError(f"gap_check_every must be >= 1, got {self.gap_check_every}")

    def resolve_tol(self, meas: Measurements) -> float:
        """Absolute gap tolerance; defaults to tol_rel * 1/2 ||M||_F^2."""
        if self.tol is not None:
            return float(self.tol)
        tol = self.tol_rel * 0.5 * float(np.sum(meas.M * meas.M))
        return tol if tol > 0 else self.tol_rel


@dataclass
class SolveReport:
    estimate: SourceEstimate
    gap: float
    sweeps: int
    converged: bool
    tol: float
    history: List[float] = field(default_factory=list)
    supports: List[np.ndarray] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.converged and self.error is None


# -----------------------------
# Certificates
# -----------------------------

def _gap(meas: Measurements, lam: float, X: np.ndarray, R: np.ndarray, Z: np.ndarray, n_orient: int) -> float:
    """Duality gap from a residual R = M - G X and its correlations Z = G^T R."""
    dual_norm = float(block_norms(Z, n_orient).max(initial=0.0))
    theta = R / max(1.0, dual_norm / lam)
    primal = 0.5 * float(np.sum(R * R)) + lam * float(block_norms(X, n_orient).sum())
    diff = meas.M - theta
    dual = 0.5 * float(np.sum(meas.M * meas.M)) - 0.5 * float(np.sum(diff * diff))
    return primal - dual


def duality_gap(design: BlockDesign, meas: Measurements, lam: float, X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    _check_shapes(design, meas, X)
    R = meas.M - design.G @ X
    return _gap(meas, lam, X, R, design.G.T @ R, design.n_orient)


def kkt_violation(design: BlockDesign, meas: Measurements, lam: float, X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    _check_shapes(design, meas, X)
    R = meas.M - design.G @ X
    worst = 0.0
    for s in range(design.n_sources):
        sl = design.block_slice(s)
        corr = design.block(s).T @ R
        norm_xs = float(np.linalg.norm(X[sl]))
        if norm_xs == 0.0:
            worst = max(worst, float(np.linalg.norm(corr)) - lam)
        else:
            worst = max(worst, float(np.linalg.norm(corr - lam * X[sl] / norm_xs)))
    return max(worst, 0.0)


def block_lipschitz(design: BlockDesign) -> np.ndarray:
    """Squared spectral norm of every N×O block of G."""
    return np.array([linalg.norm(design.block(s), 2) ** 2 for s in range(design.n_sources)])


def column_gram(design: BlockDesign) -> Optional[np.ndarray]:
    """G^T G, or None when the design is wider than GRAM_MAX_COLUMNS."""
    if design.n_columns > GRAM_MAX_COLUMNS:
        return None
    return design.G.T @ design.G


# -----------------------------
# Solver
# -----------------------------

def _bcd(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    X: np.ndarray,
    lipschitz: np.ndarray,
    gram: Optional[np.ndarray],
    tol: float,
    config: SolverConfig,
) -> SolveReport:
    G, O, S = design.G, design.n_orient, design.n_sources
    # all-zero columns cannot influence the fit
    usable = lipschitz > 0
    for s in np.flatnonzero(~usable):
        X[design.block_slice(s)] = 0.0
    # a zero block leaves zero only if ||G_s^T R||_F > lam
    threshold = np.where(usable, lam * lam, np.inf)

    R = meas.M - G @ X
    Z = G.T @ R
    gap = _gap(meas, lam, X, R, Z, O)
    if not np.isfinite(gap):
        raise NumericalError("non-finite duality gap at entry")
    active = X.reshape(S, -1).any(axis=1)
    history: List[float] = []
    sweeps = 0
    converged = gap <= tol

    while not converged and sweeps < config.max_iter:
        sweeps += 1
        s = 0
        while s < S:
            ahead = np.flatnonzero(active[s:])
            stop = s + int(ahead[0]) if ahead.size else S
            if stop > s:
                # zero blocks in [s, stop) stay zero unless they cross the threshold
                segment = Z[s * O:stop * O].reshape(stop - s, -1)
                hits = np.flatnonzero(np.einsum("ij,ij->i", segment, segment) > threshold[s:stop])
                if not hits.size:
                    s = stop
                    continue
                s += int(hits[0])

            sl = slice(s * O, (s + 1) * O)
            X_s = X[sl]
            X_new = block_soft_threshold(X_s + Z[sl] / lipschitz[s], lam / lipschitz[s])
            delta = X_new - X_s
            if delta.any():
                X[sl] = X_new
                active[s] = X_new.any()
                if gram is not None:
                    Z -= gram[:, sl] @ delta
                else:
                    Z -= G.T @ (G[:, sl] @ delta)
            s += 1

        if not np.isfinite(X).all():
            raise NumericalError(f"non-finite block update at sweep {sweeps}")
        if config.track_objective:
            history.append(objective_mxne(design, meas, X, lam))
        if sweeps == 1 or sweeps % config.gap_check_every == 0 or sweeps == config.max_iter:
            # exact residual and correlations from X
            R = meas.M - G @ X
            Z = G.T @ R
            gap = _gap(meas, lam, X, R, Z, O)
            if not np.isfinite(gap):
                raise NumericalError(f"non-finite duality gap at sweep {sweeps}")
            logger.debug("[MXNE] sweep=%d gap=%.3e tol=%.3e", sweeps, gap, tol)
            converged = gap <= tol

    if not converged:
        logger.warning("[MXNE] no convergence lam=%.4g sweeps=%d gap=%.3e tol=%.3e", lam, sweeps, gap, tol)

    return SolveReport(
        estimate=SourceEstimate(X, O),
        gap=gap,
        sweeps=sweeps,
        converged=converged,
        tol=tol,
        history=history,
    )


def mxne_solve(
    design: BlockDesign,
    meas: Measurements,
    lam: float,
    init: Optional[SourceEstimate] = None,
    config: Optional[SolverConfig] = None,
    lipschitz: Optional[np.ndarray] = None,
    gram: Optional[np.ndarray] = None,
) -> SolveReport:
    """
    Solve the MxNE problem at `lam` by cyclic block coordinate descent.

    `init` warm-starts the iterate; `lipschitz` and `gram` let callers reuse
    per-design constants (e.g. rescaled ones for a reweighted design).
    """
    config = config or SolverConfig()
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    _check_shapes(design, meas)

    if init is None:
        X = np.zeros((design.n_columns, meas.n_times))
    else:
        X = np.array(init.X, dtype=float)
        _check_shapes(design, meas, X)

    if lipschitz is None:
        lipschitz = block_lipschitz(design)
    if gram is None:
        gram = column_gram(design)
    return _bcd(design, meas, lam, X, lipschitz, gram, config.resolve_tol(meas), config)
