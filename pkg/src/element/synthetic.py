"""Synthetic state streams for graph benchmarks and verification.

The canonical stream is an episodic mean-reverting walk: short bursts of
correlated motion that reset near the origin, which is what encoded RL
state sequences look like at desk scale (bounded support, heavy revisits,
temporally smooth).
"""

from __future__ import annotations

import numpy as np

__all__ = ["episodic_walk", "walk_queries"]


def episodic_walk(n: int, dim: int, seed: int, *, episode_len: int = 500,
                  step: float = 1.0, reversion: float = 0.01) -> np.ndarray:
    """Episodic Ornstein-Uhlenbeck walk: resets near the origin every
    ``episode_len`` steps, otherwise drifts with mild mean reversion."""
    rng = np.random.default_rng(seed)
    out = np.empty((n, dim))
    x = np.zeros(dim)
    for t in range(n):
        if episode_len and t % episode_len == 0:
            x = 0.1 * rng.standard_normal(dim)
        x = (1.0 - reversion) * x + step * rng.standard_normal(dim)
        out[t] = x
    return out


def walk_queries(points: np.ndarray, n_queries: int, seed: int,
                 noise: float = 0.3) -> np.ndarray:
    """Queries near the stream: stored points plus isotropic noise."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(points), size=n_queries)
    return points[idx] + noise * rng.standard_normal((n_queries, points.shape[1]))
