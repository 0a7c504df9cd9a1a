"""Graph Laplacians, ordered eigensystems and harmonic truncation order."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

BETA_MARGIN = 1e-6


class GraphError(ValueError):
    """Base class for invalid adjacency input."""


class AsymmetricGraphError(GraphError):
    pass


class NegativeWeightError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Laplacian:
    values: np.ndarray
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def p(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ShiftedLaplacian:
    values: np.ndarray
    beta: float
    degenerate: bool = False


def check_adjacency(weights, *, require_connected: bool = True) -> np.ndarray:
    """Validate a weighted adjacency matrix and return it as a float array.

    Raises a ``GraphError`` subclass naming the violated property.
    """
    W = np.array(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise GraphError(f"adjacency must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise GraphError("adjacency has non-finite entries")
    scale = max(1.0, float(np.abs(W).max(initial=0.0)))
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12 * scale):
        raise AsymmetricGraphError("adjacency is not symmetric")
    if np.any(W < 0):
        raise NegativeWeightError("adjacency has negative weights")
    if np.any(np.diag(W) != 0):
        raise SelfLoopError("adjacency has nonzero diagonal entries")
    W = 0.5 * (W + W.T)
    if require_connected and not is_connected(W):
        raise DisconnectedGraphError("graph has more than one connected component")
    return W


def is_connected(W: np.ndarray) -> bool:
    """Breadth-first reachability over nonzero weights from node 0."""
    n = W.shape[0]
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(W[i]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def build_laplacian(weights) -> Laplacian:
    """L = D - W for a symmetric, nonnegative, connected adjacency matrix."""
    W = check_adjacency(weights)
    degrees = W.sum(axis=1)
    return Laplacian(np.diag(degrees) - W, degrees)


def _values(L) -> np.ndarray:
    return L.values if isinstance(L, Laplacian) else np.asarray(L, dtype=float)


def canonicalize_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    Near-ties (within ``tol``) go to the lowest row index.
    """
    V = np.array(vectors, dtype=float, copy=True)
    if V.ndim == 1:
        return canonicalize_signs(V[:, None], tol)[:, 0]
    mags = np.abs(V)
    for h in range(V.shape[1]):
        col = mags[:, h]
        top = col.max(initial=0.0)
        if top == 0.0:
            continue
        idx = int(np.flatnonzero(col >= top - tol)[0])
        if V[idx, h] < 0:
            V[:, h] = -V[:, h]
    return V


def eigensystem(L, p: int) -> EigenSystem:
    """The ``p`` smallest eigenpairs of a symmetric matrix, sign-canonical."""
    M = _values(L)
    n = M.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p must lie in [1, {n}], got {p}")
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    return EigenSystem(w[:p].copy(), canonicalize_signs(V[:, :p]))


def shift_positive_definite(L, margin: float = BETA_MARGIN) -> ShiftedLaplacian:
    """Return beta*I - L with beta slightly above the largest eigenvalue of L.

    The margin keeps the shifted matrix strictly positive definite. A zero
    Laplacian (single node) yields beta = 0 and is flagged degenerate.
    """
    M = _values(L)
    try:
        lam_max = float(np.linalg.eigvalsh(M)[-1])
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    if lam_max <= 0.0:
        return ShiftedLaplacian(np.zeros_like(M), 0.0, degenerate=True)
    beta = lam_max * (1.0 + margin)
    return ShiftedLaplacian(beta * np.eye(M.shape[0]) - M, beta)


def reconstruction_error_curve(L, p_max: int) -> list[tuple[int, float]]:
    """Relative Frobenius error of the rank-p low-frequency reconstruction.

    Uses the spectral identity ||L - Phi_p Lam_p Phi_p^T||_F^2 = sum of the
    squared discarded eigenvalues.
    """
    M = _values(L)
    n = M.shape[0]
    if not 1 <= p_max <= n:
        raise ValueError(f"p_max must lie in [1, {n}], got {p_max}")
    w = np.linalg.eigvalsh(M)
    total = float(np.sum(w**2))
    if total == 0.0:
        return [(p, 0.0) for p in range(1, p_max + 1)]
    # tail[p] = sum of squares of eigenvalues p..n-1
    tail = np.concatenate([np.cumsum((w**2)[::-1])[::-1], [0.0]])
    return [(p, float(np.sqrt(max(tail[p], 0.0) / total))) for p in range(1, p_max + 1)]


def suggest_p(curve: list[tuple[int, float]], fraction: float = 0.01) -> int:
    """Smallest p after which the error drops by less than ``fraction * error(1)``."""
    if not curve:
        raise ValueError("empty curve")
    ps = [p for p, _ in curve]
    errs = [e for _, e in curve]
    threshold = fraction * errs[0]
    for k in range(len(errs) - 1):
        if errs[k] - errs[k + 1] < threshold:
            return ps[k]
    return ps[-1]


def mean_curve(curves: list[list[tuple[int, float]]]) -> list[tuple[int, float]]:
    if not curves:
        raise ValueError("no curves to average")
    errs = np.mean([[e for _, e in c] for c in curves], axis=0)
    return [(p, float(e)) for (p, _), e in zip(curves[0], errs)]
