"""Propagation operators over a normalized adjacency.

``propagate_pnd`` is the recursion P <- γÃP + (1-γ)P applied T times; it is
*not* the restart-style APPNP recursion and drifts toward the dominant
eigenvector of Ã rather than toward PPR.  ``ppr_exact`` gives the true PPR
operator (1-γ)(I - γÃ)^-1 for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, NumericError
from .graph import NormalizedAdjacency, _as_matrix, apply_operator


@dataclass(frozen=True)
class PropagationConfig:
    gamma: float
    iterations: int
    floor: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.floor > 0.0:
            raise ConfigError(f"floor must be positive, got {self.floor}")


def _checked(P, a_norm: NormalizedAdjacency) -> np.ndarray:
    P = _as_matrix(P)
    if P.shape[0] != a_norm.num_nodes:
        raise InputError(f"matrix has {P.shape[0]} rows, graph has {a_norm.num_nodes} nodes")
    if not np.all(np.isfinite(P)):
        raise InputError("matrix contains non-finite entries")
    return P


def _step(P, a_norm, gamma):
    return gamma * apply_operator(a_norm, P) + (1.0 - gamma) * P


def propagate_pnd(P, a_norm: NormalizedAdjacency, cfg: PropagationConfig) -> np.ndarray:
    """Return (γÃ + (1-γ)I)^T P using T sparse applications."""
    out = _checked(P, a_norm)
    for _ in range(cfg.iterations):
        out = _step(out, a_norm, cfg.gamma)
    return out


def _index_set(idx, n) -> np.ndarray:
    idx = np.unique(np.asarray(idx, dtype=np.int64).ravel())
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InputError(f"index set contains ids outside [0, {n})")
    return idx


def propagate_pnd_fix(P, a_norm: NormalizedAdjacency, cfg: PropagationConfig, train_idx) -> np.ndarray:
    """P&D-fix: after each propagation step, training rows are reset to their input values."""
    P = _checked(P, a_norm)
    pinned = _index_set(train_idx, a_norm.num_nodes)
    out = P
    for _ in range(cfg.iterations):
        out = _step(out, a_norm, cfg.gamma)
        out[pinned] = P[pinned]
    return out


def conjugate_gradient(matvec, B, tol=1e-10, max_iter=None):
    """Solve S Z = B for SPD S, each column independently but in lockstep.

    Convergence is declared per column once its residual 2-norm is <= tol.
    """
    B = np.asarray(B, dtype=np.float64)
    n, k = B.shape
    max_iter = 10 * max(n, 1) if max_iter is None else max_iter
    Z = np.zeros_like(B)
    R = B.copy()
    D = R.copy()
    rr = np.einsum("ij,ij->j", R, R)
    active = np.sqrt(rr) > tol
    it = 0
    while active.any():
        if it >= max_iter:
            raise NumericError(
                f"conjugate gradient did not converge in {max_iter} iterations "
                f"(max residual {np.sqrt(rr.max()):.3e})")
        SD = matvec(D)
        dSd = np.einsum("ij,ij->j", D, SD)
        alpha = np.where(active, rr / np.where(active, dSd, 1.0), 0.0)
        Z += D * alpha
        R -= SD * alpha
        rr_new = np.einsum("ij,ij->j", R, R)
        beta = np.where(active, rr_new / np.where(active, rr, 1.0), 0.0)
        D = R + D * beta
        rr = rr_new
        active = np.sqrt(rr) > tol
        it += 1
    return Z


def ppr_exact(P, a_norm: NormalizedAdjacency, gamma: float, tol: float = 1e-10) -> np.ndarray:
    """(1-γ)(I - γÃ)^-1 P via conjugate gradients."""
    if not 0.0 < gamma < 1.0:
        raise InputError(f"ppr_exact needs 0 < gamma < 1, got {gamma}")
    P = _checked(P, a_norm)
    Z = conjugate_gradient(lambda V: V - gamma * apply_operator(a_norm, V), P, tol=tol)
    return (1.0 - gamma) * Z


def inverse_propagate(P, a_norm: NormalizedAdjacency, gamma: float) -> np.ndarray:
    """(2I - γÃ) P.  Output may have negative entries."""
    P = _checked(P, a_norm)
    return 2.0 * P - gamma * apply_operator(a_norm, P)


def normalize_rows(P, floor: float = 1e-8) -> np.ndarray:
    """Clamp entries to at least ``floor`` and rescale each row to sum to 1."""
    if not floor > 0.0:
        raise InputError("floor must be positive")
    Q = np.maximum(_as_matrix(P), floor)
    return Q / Q.sum(axis=1, keepdims=True)
