"""Intrinsic reward assembly.

Episode-level entropy feedback arrives only when an episode ends, so it is
spread over the episode's states as a per-state (Markovian) reward: each
state's reward is the running mean of ``H(episode) / T`` over the episodes
that contained it. ``optimal_reward_closed_form`` is that assignment's
closed form, which minimizes the Monte-Carlo upper bound
(``upper_bound_loss``) of the squared decomposition error
(``decomposition_loss``).

Lifelong novelty is ``log(||knn distances|| + 1)`` against the whole graph
memory: large where the nearest stored states are far, zero at exact
revisits. Both streams are min-max normalized per batch before the weighted
sum ``r = r_ep + beta * r_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .entropy import (EntropyValue, EstimatorKind, KernelConfig, kde_entropy,
                      knn_entropy, renyi_matrix_entropy, subsample_states)
from .errors import EmptyInput, InvalidArgument
from .knn_graph import KnnGraph, SearchConfig, gnns_search_batch

__all__ = [
    "EpisodicMode", "Normalization", "LifelongDistance", "EstimatorChoice",
    "RewardConfig", "CombinedReward", "EpisodicRewardTable",
    "episode_entropy", "assign_episodic_rewards", "lifelong_reward",
    "lifelong_rewards_batch", "minmax_normalize", "combine_rewards",
    "decomposition_loss", "upper_bound_loss", "optimal_reward_closed_form",
]

DEFAULT_EMPTY_GRAPH_REWARD = math.log(2.0)


class EpisodicMode(Enum):
    PER_EPISODE_CONSTANT = "per_episode_constant"
    TABULAR_RUNNING_MEAN = "tabular_running_mean"
    KNN_SMOOTHED = "knn_smoothed"


class Normalization(Enum):
    MINMAX_BATCH = "minmax_batch"
    NONE = "none"


class LifelongDistance(Enum):
    """Reading of "norm of all k nearest neighbor distances"."""

    VECTOR_NORM = "vector_norm"   # Euclidean norm of the k-distance vector
    KTH_ONLY = "kth_only"         # distance to the single kth neighbor


@dataclass(frozen=True)
class EstimatorChoice:
    """Which entropy estimator scores an episode, plus its knobs."""

    kind: EstimatorKind = EstimatorKind.KDE
    sigma: float = 1.0
    k: int = 5
    alpha: float = 3.0
    subsample_cap: int = 256

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgument(f"estimator k must be >= 1, got {self.k}")
        if self.subsample_cap < 1:
            raise InvalidArgument(
                f"subsample_cap must be >= 1, got {self.subsample_cap}")


@dataclass(frozen=True)
class RewardConfig:
    beta: float = 0.5
    k_lifelong: int = 3
    normalization: Normalization = Normalization.MINMAX_BATCH
    episodic_mode: EpisodicMode = EpisodicMode.PER_EPISODE_CONSTANT
    lifelong_distance: LifelongDistance = LifelongDistance.VECTOR_NORM
    empty_graph_reward: float = DEFAULT_EMPTY_GRAPH_REWARD

    def __post_init__(self):
        if not (self.beta >= 0.0 and np.isfinite(self.beta)):
            raise InvalidArgument(f"beta must be >= 0, got {self.beta}")
        if self.k_lifelong < 1:
            raise InvalidArgument(f"k_lifelong must be >= 1, got {self.k_lifelong}")


@dataclass(frozen=True)
class CombinedReward:
    r_ep: float
    r_l: float
    r_total: float


class EpisodicRewardTable:
    """Running mean of scaled episode entropies per state key.

    Each update records one episode's ``H / T`` against a key; the stored
    mean is always the arithmetic mean of everything recorded so far, so a
    replay of the update stream reproduces it exactly. Keys optionally carry
    a representative point to support neighbor-smoothed reads.
    """

    def __init__(self):
        self._stats: dict[Hashable, list] = {}
        self._points: dict[Hashable, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._stats)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._stats

    def update(self, key: Hashable, value: float, point=None):
        slot = self._stats.get(key)
        if slot is None:
            self._stats[key] = [1, float(value)]
        else:
            slot[0] += 1
            slot[1] += (float(value) - slot[1]) / slot[0]
        if point is not None and key not in self._points:
            self._points[key] = np.asarray(point, dtype=np.float64)

    def count(self, key: Hashable) -> int:
        return self._stats[key][0]

    def mean(self, key: Hashable) -> float:
        return self._stats[key][1]

    def items(self):
        return ((k, v[0], v[1]) for k, v in self._stats.items())

    def smoothed(self, state: np.ndarray, k: int) -> float:
        """Mean of the table values of the k nearest recorded states."""
        if not self._points:
            raise InvalidArgument("no recorded points to smooth against")
        keys = list(self._points.keys())
        pts = np.stack([self._points[key] for key in keys])
        diff = pts - np.asarray(state, dtype=np.float64)
        d2 = np.einsum("ij,ij->i", diff, diff)
        order = np.lexsort((np.arange(len(keys)), d2))[:k]
        return float(np.mean([self._stats[keys[i]][1] for i in order]))


def episode_entropy(states, choice: EstimatorChoice) -> EntropyValue:
    """Entropy of one episode's states under the chosen estimator."""
    if choice.kind == EstimatorKind.KDE:
        return kde_entropy(states, KernelConfig(choice.sigma))
    if choice.kind == EstimatorKind.KNN:
        return knn_entropy(states, choice.k)
    if choice.kind == EstimatorKind.RENYI:
        sub = subsample_states(np.asarray(states, dtype=np.float64),
                               choice.subsample_cap)
        return renyi_matrix_entropy(sub, choice.alpha, KernelConfig(choice.sigma))
    raise InvalidArgument(f"unknown estimator kind {choice.kind!r}")


def assign_episodic_rewards(entropy_value: float, episode_len: int,
                            mode: EpisodicMode, *,
                            keys: Sequence[Hashable] | None = None,
                            states: np.ndarray | None = None,
                            table: EpisodicRewardTable | None = None,
                            k_smooth: int = 3) -> np.ndarray:
    """Spread one episode's entropy over its states as per-state rewards.

    ``per_episode_constant`` gives every state ``H / T`` (exact when each
    state occurs in exactly one episode, as in continuous spaces).
    ``tabular_running_mean`` records ``H / T`` once per distinct key and
    reads back current means, realizing the expectation over episodes
    containing each state. ``knn_smoothed`` records the same way but reads
    each state's reward as the mean over its ``k_smooth`` nearest recorded
    states.
    """
    h = float(entropy_value)
    if not np.isfinite(h):
        raise InvalidArgument(f"episode entropy must be finite, got {h}")
    if episode_len < 1:
        raise InvalidArgument(f"episode length must be >= 1, got {episode_len}")
    share = h / episode_len
    if mode == EpisodicMode.PER_EPISODE_CONSTANT:
        return np.full(episode_len, share)
    if table is None:
        raise InvalidArgument(f"mode {mode.value} requires a reward table")
    if keys is None:
        raise InvalidArgument(f"mode {mode.value} requires state keys")
    if len(keys) != episode_len:
        raise InvalidArgument(
            f"got {len(keys)} keys for episode length {episode_len}")
    if mode == EpisodicMode.KNN_SMOOTHED and states is None:
        raise InvalidArgument("knn_smoothed requires the episode states")
    pts = None
    if states is not None:
        pts = np.asarray(states, dtype=np.float64)
        if pts.shape[0] != episode_len:
            raise InvalidArgument(
                f"got {pts.shape[0]} states for episode length {episode_len}")
    seen = set()
    for t, key in enumerate(keys):
        if key in seen:
            continue
        seen.add(key)
        table.update(key, share, point=None if pts is None else pts[t])
    if mode == EpisodicMode.TABULAR_RUNNING_MEAN:
        return np.asarray([table.mean(key) for key in keys])
    return np.asarray([table.smoothed(pts[t], k_smooth)
                       for t in range(episode_len)])


def _novelty(dists: np.ndarray, distance_mode: LifelongDistance) -> float:
    if distance_mode == LifelongDistance.KTH_ONLY:
        magnitude = float(dists[-1])
    else:
        magnitude = float(np.linalg.norm(dists))
    return math.log(magnitude + 1.0)


def lifelong_reward(g: KnnGraph, state, cfg: SearchConfig, *,
                    distance_mode: LifelongDistance = LifelongDistance.VECTOR_NORM,
                    empty_graph_reward: float = DEFAULT_EMPTY_GRAPH_REWARD) -> float:
    """Novelty of a state against the lifelong memory.

    ``log(||d_1..d_k||_2 + 1)`` over the approximate neighbor distances
    returned by graph search; never negative, zero at an exact revisit of
    the sole stored point. An empty graph yields the configured
    maximum-novelty constant (the graph stays empty until the first update
    window, but rewards are still needed).
    """
    if len(g) == 0:
        return float(empty_graph_reward)
    (ids, dists), = gnns_search_batch(g, np.asarray(state, dtype=np.float64), cfg)
    return _novelty(dists, distance_mode)


def lifelong_rewards_batch(g: KnnGraph, states: np.ndarray, cfg: SearchConfig, *,
                           distance_mode: LifelongDistance = LifelongDistance.VECTOR_NORM,
                           empty_graph_reward: float = DEFAULT_EMPTY_GRAPH_REWARD
                           ) -> np.ndarray:
    """Vectorized :func:`lifelong_reward` over rows of ``states``."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2:
        raise InvalidArgument(f"states must be (n, d), got shape {states.shape}")
    if states.shape[0] == 0:
        return np.empty(0)
    if len(g) == 0:
        return np.full(states.shape[0], float(empty_graph_reward))
    results = gnns_search_batch(g, states, cfg)
    return np.asarray([_novelty(dists, distance_mode) for _, dists in results])


def minmax_normalize(values: Iterable[float]) -> np.ndarray:
    """Affine map of a batch onto [0, 1]; a constant batch maps to zeros."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("cannot normalize an empty batch")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def combine_rewards(r_ep_batch, r_l_batch, cfg: RewardConfig) -> list[CombinedReward]:
    """Normalize both streams over the batch and form r_ep + beta * r_l."""
    ep = np.asarray(list(r_ep_batch), dtype=np.float64)
    ll = np.asarray(list(r_l_batch), dtype=np.float64)
    if ep.shape != ll.shape:
        raise InvalidArgument(
            f"batch lengths differ: {ep.shape[0]} episodic vs {ll.shape[0]} lifelong")
    if ep.size == 0:
        raise InvalidArgument("batches must be nonempty")
    if cfg.normalization == Normalization.MINMAX_BATCH:
        ep = minmax_normalize(ep)
        ll = minmax_normalize(ll)
    total = ep + cfg.beta * ll
    return [CombinedReward(float(e), float(l), float(t))
            for e, l, t in zip(ep, ll, total)]


def _check_episodes(episodes) -> list[tuple[list, float]]:
    eps = [(list(keys), float(h)) for keys, h in episodes]
    if not eps:
        raise EmptyInput("need at least one episode")
    for keys, _ in eps:
        if not keys:
            raise InvalidArgument("episodes must be nonempty")
    return eps


def decomposition_loss(rewards: Mapping[Hashable, float], episodes) -> float:
    """Mean over episodes of (H - sum of per-state rewards)^2."""
    eps = _check_episodes(episodes)
    total = 0.0
    for keys, h in eps:
        try:
            s = sum(rewards[key] for key in keys)
        except KeyError as exc:
            raise InvalidArgument(f"missing reward for state key {exc.args[0]!r}")
        total += (h - s) ** 2
    return total / len(eps)


def upper_bound_loss(rewards: Mapping[Hashable, float], episodes) -> float:
    """Monte-Carlo upper bound: E_episode E_t (H - T * r(s_t))^2.

    Equals ``decomposition_loss`` plus the expected ``T^2 * variance`` of the
    per-step rewards within each episode. Defined for equal-length episodes
    only.
    """
    eps = _check_episodes(episodes)
    t_len = len(eps[0][0])
    if any(len(keys) != t_len for keys, _ in eps):
        raise InvalidArgument(
            "upper_bound_loss requires equal-length episodes; "
            "use the variable-length closed form instead")
    total = 0.0
    for keys, h in eps:
        try:
            vals = np.asarray([rewards[key] for key in keys])
        except KeyError as exc:
            raise InvalidArgument(f"missing reward for state key {exc.args[0]!r}")
        total += float(np.mean((h - t_len * vals) ** 2))
    return total / len(eps)


def optimal_reward_closed_form(episodes, variable_length: bool = False
                               ) -> dict[Hashable, float]:
    """Closed-form minimizer of the upper bound.

    Fixed length: each state's reward is its occurrence-weighted mean of
    ``H / T`` over episodes containing it (identical to the plain mean when
    no state repeats within an episode, and the exact minimizer otherwise).
    Variable length: ``sum(c * T * H) / sum(c * T^2)`` with ``c`` the
    per-episode occurrence count.
    """
    eps = _check_episodes(episodes)
    if not variable_length:
        t_len = len(eps[0][0])
        if any(len(keys) != t_len for keys, _ in eps):
            raise InvalidArgument(
                "episodes have different lengths; set variable_length=True")
    num: dict[Hashable, float] = {}
    den: dict[Hashable, float] = {}
    for keys, h in eps:
        t_len = len(keys)
        counts: dict[Hashable, int] = {}
        for key in keys:
            counts[key] = counts.get(key, 0) + 1
        for key, c in counts.items():
            num[key] = num.get(key, 0.0) + c * t_len * h
            den[key] = den.get(key, 0.0) + c * t_len * t_len
    return {key: num[key] / den[key] for key in num}
