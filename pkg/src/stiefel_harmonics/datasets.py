"""Synthetic cohorts standing in for real connectomes and regional measures."""
from __future__ import annotations

import numpy as np

from .analysis import NodeSignal
from .graph import is_connected


def block_labels(n: int, blocks: int) -> np.ndarray:
    return np.arange(n) * blocks // n


def sbm_network(n: int, rng: np.random.Generator, *, blocks: int = 4, p_in: float = 0.8,
                p_out: float = 0.15, weight_range=(0.5, 1.5), max_tries: int = 100) -> np.ndarray:
    """Connected weighted stochastic-block-model adjacency matrix."""
    z = block_labels(n, blocks)
    prob = np.where(z[:, None] == z[None, :], p_in, p_out)
    for _ in range(max_tries):
        mask = rng.random((n, n)) < prob
        W = np.triu(mask * rng.uniform(*weight_range, (n, n)), 1)
        W = W + W.T
        if is_connected(W):
            return W
    raise RuntimeError("could not draw a connected network; raise p_in or p_out")


def sbm_cohort(m: int, n: int, seed: int = 0, **kwargs) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [sbm_network(n, rng, **kwargs) for _ in range(m)]


def planted_signal_cohort(
    Psi,
    per_group: int,
    *,
    harmonic: int = 5,
    amplitude: float = 2.0,
    noise: float = 0.5,
    seed: int = 0,
    groups: tuple[str, str] = ("A", "B"),
    baseline=None,
) -> list[NodeSignal]:
    """Two groups of noisy node signals; group B gets amplitude * psi_harmonic added.

    ``harmonic`` is 1-based. Signals are baseline + noise * N(0, I).
    """
    Psi = np.asarray(Psi, dtype=float)
    n = Psi.shape[0]
    rng = np.random.default_rng(seed)
    base = np.zeros(n) if baseline is None else np.asarray(baseline, dtype=float)
    out = []
    for g, label in enumerate(groups):
        for i in range(per_group):
            f = base + noise * rng.standard_normal(n)
            if g == 1:
                f = f + amplitude * Psi[:, harmonic - 1]
            out.append(NodeSignal(f"{label}{i:03d}", f, label))
    return out
