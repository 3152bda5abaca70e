"""Tabular Q-learning backbone and the intrinsic-reward training loop.

The loop is the off-policy recipe: act epsilon-greedily, archive encoded
states into the kNN graph during scheduled update windows, score each
finished episode with a state-entropy estimate and write its transitions to
replay with their episodic rewards frozen in, then do batched policy
updates where the lifelong reward is recomputed fresh for every sampled
transition (novelty is non-stationary; caching it would freeze the graph's
opinion at insert time).

Everything is a pure function of (configs, seed): action sampling, resets
and replay draws share one seeded generator, and graph searches derive
their restarts from the graph state and query alone.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable

import numpy as np

from .encoder import FixedEncoder
from .errors import InvalidArgument, NumericalFailure
from .knn_graph import SearchConfig, graph_insert, graph_new
from .metrics import CoverageCounter, EpisodeRecord, RunLog, eval_episode_entropy
from .rewards import (EpisodicMode, EpisodicRewardTable, EstimatorChoice,
                      RewardConfig, assign_episodic_rewards, combine_rewards,
                      episode_entropy, lifelong_rewards_batch)

__all__ = [
    "QTable", "q_update", "epsilon_greedy", "Transition", "ReplayBuffer",
    "ScheduleConfig", "AgentParams", "RewardMode", "RunParams", "run_element",
]


class QTable:
    """State-action values in a dict; unvisited entries read as zero."""

    def __init__(self, n_actions: int, learning_rate: float = 0.1,
                 gamma: float = 0.99):
        if n_actions < 1:
            raise InvalidArgument(f"n_actions must be >= 1, got {n_actions}")
        if not 0.0 < learning_rate <= 1.0:
            raise InvalidArgument(f"learning_rate must be in (0, 1], got {learning_rate}")
        if not 0.0 <= gamma < 1.0:
            raise InvalidArgument(f"gamma must be in [0, 1), got {gamma}")
        self.n_actions = int(n_actions)
        self.learning_rate = float(learning_rate)
        self.gamma = float(gamma)
        self._values: dict[Hashable, np.ndarray] = {}

    def values(self, state: Hashable) -> np.ndarray:
        vals = self._values.get(state)
        if vals is None:
            return np.zeros(self.n_actions)
        return vals

    def __len__(self) -> int:
        return len(self._values)


def q_update(q: QTable, state: Hashable, action: int, reward: float,
             next_state: Hashable) -> None:
    """One tabular TD(0) backup with the table's learning rate and gamma."""
    if not np.isfinite(reward):
        raise InvalidArgument(f"reward must be finite, got {reward}")
    vals = q._values.get(state)
    if vals is None:
        vals = np.zeros(q.n_actions)
        q._values[state] = vals
    target = reward + q.gamma * float(np.max(q.values(next_state)))
    vals[action] += q.learning_rate * (target - vals[action])


def epsilon_greedy(q: QTable, state: Hashable, epsilon: float, rng) -> int:
    """Uniform action with probability epsilon, else argmax with ties going
    to the smallest action index."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidArgument(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(q.n_actions))
    return int(np.argmax(q.values(state)))


@dataclass(frozen=True)
class Transition:
    state_key: Hashable
    action: int
    next_key: Hashable
    next_state: np.ndarray
    r_ep: float
    episode: int


class ReplayBuffer:
    """FIFO transition store; sampling is uniform with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidArgument(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._items: deque[Transition] = deque(maxlen=self.capacity)

    def push(self, item: Transition) -> None:
        self._items.append(item)

    def sample(self, batch_size: int, rng) -> list[Transition]:
        if not self._items:
            raise InvalidArgument("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


@dataclass(frozen=True)
class ScheduleConfig:
    """Graph update cadence: for step t >= u, inserts happen while
    (t mod u) < t_u. The graph stays empty before the first window."""

    u: int
    t_u: int
    total_steps: int

    def __post_init__(self):
        if self.u < 1:
            raise InvalidArgument(f"u must be >= 1, got {self.u}")
        if not 1 <= self.t_u <= self.u:
            raise InvalidArgument(f"t_u must be in [1, u], got {self.t_u}")
        if self.total_steps < 1:
            raise InvalidArgument(f"total_steps must be >= 1, got {self.total_steps}")

    def in_window(self, t: int) -> bool:
        return t >= self.u and (t % self.u) < self.t_u


@dataclass(frozen=True)
class AgentParams:
    learning_rate: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 0.1
    epsilon_end: float = 0.01
    batch_size: int = 128
    updates_per_episode: int | None = None   # None: one per environment step
    replay_capacity: int | None = None       # None: total_steps

    def __post_init__(self):
        for name in ("epsilon_start", "epsilon_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must be in [0, 1], got {v}")
        if self.batch_size < 1:
            raise InvalidArgument(f"batch_size must be >= 1, got {self.batch_size}")


class RewardMode(Enum):
    COMBINED = "combined"
    EPISODIC_ONLY = "episodic_only"
    LIFELONG_ONLY = "lifelong_only"


@dataclass(frozen=True)
class RunParams:
    reward: RewardConfig = field(default_factory=RewardConfig)
    schedule: ScheduleConfig = field(default_factory=lambda: ScheduleConfig(
        u=50_000, t_u=5_000, total_steps=200_000))
    search: SearchConfig = field(default_factory=SearchConfig)
    estimator: EstimatorChoice = field(default_factory=EstimatorChoice)
    agent: AgentParams = field(default_factory=AgentParams)
    reward_mode: RewardMode = RewardMode.COMBINED
    snapshot_episodes: tuple[int, ...] = (5, 50, 300)
    eval_cap: int = 256


def _epsilon_at(params: AgentParams, t: int, total: int) -> float:
    frac = min(1.0, t / total)
    return params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac


def _reward_grid(env, encoder, params: RunParams, graph, table):
    """Per-cell intrinsic reward over an enumerable state space."""
    obs, keys, shape, ids = env.enumerate_states()
    encoded = encoder.encode_batch(obs)
    grid = np.zeros(shape)
    if params.reward_mode == RewardMode.EPISODIC_ONLY:
        values = [table.mean(k) if table is not None and k in table else 0.0
                  for k in keys]
    else:
        values = lifelong_rewards_batch(
            graph, encoded, params.search,
            distance_mode=params.reward.lifelong_distance,
            empty_graph_reward=params.reward.empty_graph_reward)
    flat = grid.reshape(-1)
    for cell_id, v in zip(ids, values):
        flat[cell_id] = v
    return grid


def run_element(env, encoder: FixedEncoder, params: RunParams, seed: int) -> RunLog:
    """Train a tabular agent on intrinsic rewards; returns the run log.

    Episodes have the environment's fixed length. Replay transitions carry
    the episodic reward assigned when their episode closed; the lifelong
    term is recomputed per sampled batch against the current graph, then
    both streams are min-max normalized over the batch and combined as
    ``r_ep + beta * r_l`` (with one stream zeroed in the single-objective
    modes, which normalization maps to exact zeros).
    """
    rng = np.random.default_rng(seed)
    schedule = params.schedule
    agent = params.agent
    use_lifelong = params.reward_mode != RewardMode.EPISODIC_ONLY
    use_episodic = params.reward_mode != RewardMode.LIFELONG_ONLY
    tabular = params.reward.episodic_mode != EpisodicMode.PER_EPISODE_CONSTANT

    graph = graph_new(params.reward.k_lifelong, seed)
    table = EpisodicRewardTable() if tabular else None
    q = QTable(env.n_actions, agent.learning_rate, agent.gamma)
    replay = ReplayBuffer(agent.replay_capacity or schedule.total_steps)
    coverage = CoverageCounter(env.coverage_bins)
    log = RunLog()
    can_snapshot = hasattr(env, "enumerate_states")

    updates = agent.updates_per_episode
    if updates is None:
        updates = env.episode_len

    t = 0
    episode = 0
    while t < schedule.total_steps:
        obs = env.reset(rng)
        ep_len = env.episode_len
        ep_states = None
        ep_keys = []
        staged = []
        max_radius = 0.0
        for step in range(ep_len):
            state_key = env.state_key(obs)
            action = epsilon_greedy(q, state_key,
                                    _epsilon_at(agent, t, schedule.total_steps), rng)
            obs = env.step(action)
            encoded = encoder.encode(obs)
            if ep_states is None:
                ep_states = np.empty((ep_len, encoded.shape[0]))
            ep_states[step] = encoded
            next_key = env.state_key(obs)
            ep_keys.append(next_key)
            if use_lifelong and schedule.in_window(t):
                graph_insert(graph, encoded, params.search)
            coverage.visit(env.coverage_cell(obs), t)
            staged.append((state_key, action, next_key, step))
            radius = float(np.linalg.norm(obs))
            if radius > max_radius:
                max_radius = radius
            t += 1

        h_raw = float(episode_entropy(ep_states, params.estimator))
        r_ep_values = assign_episodic_rewards(
            h_raw, ep_len, params.reward.episodic_mode, keys=ep_keys,
            states=ep_states, table=table, k_smooth=params.reward.k_lifelong)
        for state_key, action, next_key, step in staged:
            replay.push(Transition(state_key, action, next_key,
                                   ep_states[step].copy(),
                                   float(r_ep_values[step]), episode))

        r_l_raw_sum = 0.0
        r_l_raw_n = 0
        for _ in range(updates):
            batch = replay.sample(agent.batch_size, rng)
            next_states = np.stack([tr.next_state for tr in batch])
            if use_lifelong:
                r_l = lifelong_rewards_batch(
                    graph, next_states, params.search,
                    distance_mode=params.reward.lifelong_distance,
                    empty_graph_reward=params.reward.empty_graph_reward)
            else:
                r_l = np.zeros(len(batch))
            if use_episodic:
                r_ep = np.asarray([tr.r_ep for tr in batch])
            else:
                r_ep = np.zeros(len(batch))
            combined = combine_rewards(r_ep, r_l, params.reward)
            for tr, cr in zip(batch, combined):
                if not np.isfinite(cr.r_total):
                    raise NumericalFailure(
                        f"non-finite training reward {cr.r_total} at episode "
                        f"{episode} (r_ep={cr.r_ep}, r_l={cr.r_l})")
                q_update(q, tr.state_key, tr.action, cr.r_total, tr.next_key)
            r_l_raw_sum += float(r_l.sum())
            r_l_raw_n += len(batch)

        eval_h = float(eval_episode_entropy(ep_states, params.eval_cap))
        log.entropy_raw.append(h_raw)
        log.episode_endpoints.append(np.asarray(obs, dtype=np.float64).copy())
        log.episode_max_radius.append(max_radius)
        log.records.append(EpisodeRecord(
            episode=episode, steps=t, entropy_eval=eval_h,
            mean_r_ep=float(np.mean(r_ep_values)),
            mean_r_l=(r_l_raw_sum / r_l_raw_n) if r_l_raw_n else 0.0,
            graph_size=len(graph), unique_cells=coverage.unique_count))
        episode += 1
        if can_snapshot and episode in params.snapshot_episodes:
            log.reward_snapshots[episode] = _reward_grid(
                env, encoder, params, graph, table)

    log.coverage_history = list(coverage.history)
    if hasattr(env, "coverage_shape"):
        grid = np.zeros(env.coverage_shape)
        flat = grid.reshape(-1)
        for cell_id in coverage.visited:
            if 0 <= cell_id < flat.size:
                flat[cell_id] = 1.0
        log.coverage_grid = grid
    log.graph = graph
    log.replay = replay
    return log
