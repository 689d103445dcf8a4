"""
Support-recovery statistics and Table-1 style aggregates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from solvers.problem import BlockDesign

DEFAULT_DELTA_MM = 7.0


@dataclass(frozen=True)
class RecoveryStats:
    delta_mm: float
    precision: float
    recall: float
    n_estimated: int
    n_true: int


@dataclass(frozen=True)
class AggregateSummary:
    n_runs: int
    lambda_ratio: float
    explained_variance: float
    n_sources: float
    pct_zero: float
    pct_one: float
    pct_two: float
    pct_more: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _as_points(points: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 3)


def delta_stats(
    est_positions: Sequence[Sequence[float]],
    true_positions: Sequence[Sequence[float]],
    delta_mm: float = DEFAULT_DELTA_MM,
) -> RecoveryStats:
    """
    δ-precision: share of estimated sources within delta_mm of some true source.
    δ-recall: share of true sources within delta_mm of some estimated source.

    An empty estimate has precision 1 (vacuous); an empty truth has recall 1.
    """
    if delta_mm < 0:
        raise ValueError(f"delta_mm must be >= 0, got {delta_mm}")
    est, true = _as_points(est_positions), _as_points(true_positions)
    n_est, n_true = len(est), len(true)

    if n_est == 0 and n_true == 0:
        return RecoveryStats(delta_mm, 1.0, 1.0, 0, 0)
    if n_est == 0:
        return RecoveryStats(delta_mm, 1.0, 0.0, 0, n_true)
    if n_true == 0:
        return RecoveryStats(delta_mm, 0.0, 1.0, n_est, 0)

    close = cdist(est, true) <= delta_mm
    precision = float(close.any(axis=1).mean())
    recall = float(close.any(axis=0).mean())
    return RecoveryStats(delta_mm, precision, recall, n_est, n_true)


def prediction_risk(design: BlockDesign, X_hat: np.ndarray, X_true: np.ndarray) -> float:
    """||G (X_hat - X_true)||_F^2."""
    diff = design.G @ (np.asarray(X_hat) - np.asarray(X_true))
    return float(np.sum(diff * diff))


def summarize(runs: Sequence[Mapping[str, Any]]) -> AggregateSummary:
    """Average λ/λ_max, explained variance and support size over runs, with support-size buckets."""
    if len(runs) == 0:
        raise ValueError("summarize needs at least one run")
    df = pd.DataFrame(list(runs))
    missing = {"lambda_ratio", "explained_variance", "n_sources"} - set(df.columns)
    if missing:
        raise ValueError(f"runs are missing fields: {sorted(missing)}")

    n_sources = df["n_sources"].astype(int)
    buckets = pd.cut(n_sources, bins=[-1, 0, 1, 2, np.inf], labels=["zero", "one", "two", "more"])
    pct = buckets.value_counts(normalize=True).reindex(["zero", "one", "two", "more"], fill_value=0.0) * 100.0

    return AggregateSummary(
        n_runs=int(len(df)),
        lambda_ratio=float(df["lambda_ratio"].mean()),
        explained_variance=float(df["explained_variance"].mean()),
        n_sources=float(n_sources.mean()),
        pct_zero=float(pct["zero"]),
        pct_one=float(pct["one"]),
        pct_two=float(pct["two"]),
        pct_more=float(pct["more"]),
    )
