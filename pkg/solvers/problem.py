"""
Data model of the block-sparse inverse problem M = G X* + E.

G has S source blocks of O adjacent columns each; X is partitioned the same way
along its rows. All helpers here are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from solvers.errors import ShapeError, UndefinedInputError


# -----------------------------
# Data models
# -----------------------------

@dataclass(frozen=True, eq=False)
class BlockDesign:
    G: np.ndarray
    n_orient: int
    positions: np.ndarray

    def __post_init__(self) -> None:
        G = np.asarray(self.G, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if G.ndim != 2:
            raise ShapeError(f"G must be 2-D, got shape {G.shape}")
        if self.n_orient < 1:
            raise ShapeError(f"n_orient must be >= 1, got {self.n_orient}")
        if G.shape[1] % self.n_orient != 0:
            raise ShapeError(f"P={G.shape[1]} columns not divisible by O={self.n_orient}")
        if not np.isfinite(G).all():
            raise ShapeError("G contains non-finite entries")
        n_sources = G.shape[1] // self.n_orient
        if positions.shape != (n_sources, 3):
            raise ShapeError(f"positions must have shape ({n_sources}, 3), got {positions.shape}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "positions", positions)

    @property
    def n_sensors(self) -> int:
        return self.G.shape[0]

    @property
    def n_columns(self) -> int:
        return self.G.shape[1]

    @property
    def n_sources(self) -> int:
        return self.G.shape[1] // self.n_orient

    def block_slice(self, s: int) -> slice:
        return slice(s * self.n_orient, (s + 1) * self.n_orient)

    def block(self, s: int) -> np.ndarray:
        return self.G[:, self.block_slice(s)]

    def reweighted(self, weights: np.ndarray) -> "BlockDesign":
        """Design G·W for a per-source weight vector (W = diag(weights ⊗ 1_O))."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n_sources,):
            raise ShapeError(f"weights must have shape ({self.n_sources},), got {weights.shape}")
        return BlockDesign(self.G * np.repeat(weights, self.n_orient)[None, :], self.n_orient, self.positions)

    def rows(self, index: np.ndarray) -> "BlockDesign":
        return BlockDesign(self.G[index], self.n_orient, self.positions)


@dataclass(frozen=True, eq=False)
class Measurements:
    M: np.ndarray
    sigma: float = 1.0

    def __post_init__(self) -> None:
        M = np.asarray(self.M, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if M.ndim != 2 or M.shape[1] < 1:
            raise ShapeError(f"M must be a 2-D matrix with T >= 1, got shape {M.shape}")
        if not np.isfinite(M).all():
            raise ShapeError("M contains non-finite entries")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def n_sensors(self) -> int:
        return self.M.shape[0]

    @property
    def n_times(self) -> int:
        return self.M.shape[1]

    def rows(self, index: np.ndarray) -> "Measurements":
        return Measurements(self.M[index], self.sigma)

    def perturbed(self, delta: np.ndarray, step: float) -> "Measurements":
        return Measurements(self.M + step * delta, self.sigma)


@dataclass(frozen=True, eq=False)
class SourceEstimate:
    X: np.ndarray
    n_orient: int
    block_norms: np.ndarray = field(init=False)
    active_set: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {X.shape}")
        norms = block_norms(X, self.n_orient)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "block_norms", norms)
        object.__setattr__(self, "active_set", np.flatnonzero(norms))

    @classmethod
    def zeros(cls, n_columns: int, n_times: int, n_orient: int) -> "SourceEstimate":
        return cls(np.zeros((n_columns, n_times)), n_orient)

    @property
    def n_active(self) -> int:
        return int(self.active_set.size)


# -----------------------------
# Scalar quantities
# -----------------------------

def block_norms(X: np.ndarray, n_orient: int) -> np.ndarray:
    """Frobenius norm of each O×T row block of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got shape {X.shape}")
    if n_orient < 1 or X.shape[0] % n_orient != 0:
        raise ShapeError(f"P={X.shape[0]} rows not divisible by O={n_orient}")
    blocks = X.reshape(X.shape[0] // n_orient, n_orient * X.shape[1])
    return np.linalg.norm(blocks, axis=1)


def _check_shapes(design: BlockDesign, meas: Measurements, X: Optional[np.ndarray] = None) -> None:
    if design.n_sensors != meas.n_sensors:
        raise ShapeError(f"G has {design.n_sensors} rows but M has {meas.n_sensors}")
    if X is not None and X.shape != (design.n_columns, meas.n_times):
        raise ShapeError(f"X must have shape ({design.n_columns}, {meas.n_times}), got {X.shape}")


def lambda_max(design: BlockDesign, meas: Measurements) -> float:
    """max_s ||G_s^T M||_F: the smallest λ whose MxNE solution is exactly zero."""
    _check_shapes(design, meas)
    return float(block_norms(design.G.T @ meas.M, design.n_orient).max(initial=0.0))


def residual(design: BlockDesign, meas: Measurements, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    _check_shapes(design, meas, X)
    return meas.M - design.G @ X


def objective_mxne(design: BlockDesign, meas: Measurements, X: np.ndarray, lam: float) -> float:
    R = residual(design, meas, X)
    return 0.5 * float(np.sum(R * R)) + lam * float(block_norms(X, design.n_orient).sum())


def objective_irmxne(design: BlockDesign, meas: Measurements, X: np.ndarray, lam: float) -> float:
    R = residual(design, meas, X)
    return 0.5 * float(np.sum(R * R)) + lam * float(np.sqrt(block_norms(X, design.n_orient)).sum())


def explained_variance(design: BlockDesign, meas: Measurements, X: np.ndarray) -> float:
    energy = float(np.sum(meas.M * meas.M))
    if energy == 0.0:
        raise UndefinedInputError("explained variance is undefined for M = 0")
    R = residual(design, meas, X)
    return 1.0 - float(np.sum(R * R)) / energy


def block_soft_threshold(Y: np.ndarray, tau: float) -> np.ndarray:
    """Proximal operator of tau·||.||_F; returns exact zeros when ||Y||_F <= tau."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    norm = float(np.sqrt(np.sum(Y * Y)))
    if norm <= tau:
        return np.zeros_like(Y)
    return Y * (1.0 - tau / norm)
