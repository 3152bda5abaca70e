"""Experiment configuration: one YAML file, strictly validated.

Every key is checked against the schema below; unknown keys are errors
(silent defaults on a typo corrupt experiments), as are out-of-range
values. Errors name the offending field by its dotted path.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agents import AgentParams, RewardMode, RunParams, ScheduleConfig
from .encoder import FixedEncoder, identity_encoder, new_encoder
from .entropy import EstimatorKind
from .envs import Maze, PointMassWorld, bundled_maze, maze_load
from .errors import ConfigError
from .knn_graph import SearchConfig
from .rewards import (EpisodicMode, EstimatorChoice, LifelongDistance,
                      Normalization, RewardConfig)

__all__ = ["ExperimentConfig", "load_config", "parse_config"]


def _expect_mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _take(section: dict, path: str, key: str, kind, default, *,
          minimum=None, maximum=None, choices=None, allow_none=False):
    present = key in section
    value = section.pop(key, default)
    field_path = f"{path}.{key}" if path else key
    if value is None:
        if allow_none or not present:
            return default if not present else None
        raise ConfigError(field_path, "may not be null")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(field_path, f"expected an integer, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(field_path, f"expected {kind.__name__}, got {value!r}")
    if kind is float and not math.isfinite(value):
        raise ConfigError(field_path, f"must be finite, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field_path, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(field_path, f"must be <= {maximum}, got {value}")
    if choices is not None and value not in choices:
        raise ConfigError(field_path, f"must be one of {sorted(choices)}, got {value!r}")
    return value


def _reject_unknown(section: dict, path: str):
    if section:
        key = sorted(section)[0]
        field_path = f"{path}.{key}" if path else key
        raise ConfigError(field_path, "unknown key")


@dataclass
class ExperimentConfig:
    """Validated experiment description; builds envs, encoder and RunParams."""

    environment: str
    maze_max_steps: int = 700
    maze_file: str | None = None
    pm_episode_len: int = 1000
    pm_accel_gain: float = 0.1
    pm_dt: float = 1.0
    pm_max_speed: float = 1.0
    pm_reset_noise: float = 0.1
    pm_q_bins: int = 100
    pm_q_bound: float = 1000.0
    pm_coverage_bins: int = 100
    pm_coverage_bound: float = 1000.0
    encoder_mode: str = "identity"
    encoder_scale: float = 1.0
    encoder_seed: int = 0
    encoder_out_dim: int = 2
    estimator: EstimatorChoice = field(default_factory=EstimatorChoice)
    reward: RewardConfig = field(default_factory=RewardConfig)
    reward_mode: RewardMode = RewardMode.COMBINED
    search: SearchConfig = field(default_factory=SearchConfig)
    schedule: ScheduleConfig = field(default_factory=lambda: ScheduleConfig(
        u=50_000, t_u=5_000, total_steps=200_000))
    agent: AgentParams = field(default_factory=AgentParams)
    eval_cap: int = 256
    snapshot_episodes: tuple[int, ...] = (5, 50, 300)
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "out"

    def make_env(self):
        if self.environment == "maze":
            if self.maze_file is not None:
                return maze_load(Path(self.maze_file).read_text(),
                                 max_steps=self.maze_max_steps)
            return bundled_maze(max_steps=self.maze_max_steps)
        return PointMassWorld(
            episode_len=self.pm_episode_len, accel_gain=self.pm_accel_gain,
            dt=self.pm_dt, max_speed=self.pm_max_speed,
            reset_noise=self.pm_reset_noise, q_bins=self.pm_q_bins,
            q_bound=self.pm_q_bound, coverage_bins=self.pm_coverage_bins,
            coverage_bound=self.pm_coverage_bound)

    def make_encoder(self) -> FixedEncoder:
        if self.encoder_mode == "identity":
            return identity_encoder(2, scale=self.encoder_scale)
        return FixedEncoder(self.encoder_seed, 2, self.encoder_out_dim,
                            scale=self.encoder_scale)

    def run_params(self) -> RunParams:
        return RunParams(
            reward=self.reward, schedule=self.schedule, search=self.search,
            estimator=self.estimator, agent=self.agent,
            reward_mode=self.reward_mode,
            snapshot_episodes=self.snapshot_episodes, eval_cap=self.eval_cap)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get("ELEMENT_OUTPUT_DIR", self.output_dir))


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed YAML mapping into an :class:`ExperimentConfig`."""
    root = _expect_mapping(raw, "")
    root = dict(root)

    environment = _take(root, "", "environment", str, None,
                        choices={"maze", "pointmass"})
    if environment is None:
        raise ConfigError("environment", "is required (maze or pointmass)")

    cfg = ExperimentConfig(environment=environment)

    sec = dict(_expect_mapping(root.pop("maze", None), "maze"))
    cfg.maze_max_steps = _take(sec, "maze", "max_steps", int, 700, minimum=1)
    cfg.maze_file = _take(sec, "maze", "file", str, None, allow_none=True)
    _reject_unknown(sec, "maze")

    sec = dict(_expect_mapping(root.pop("pointmass", None), "pointmass"))
    cfg.pm_episode_len = _take(sec, "pointmass", "episode_len", int, 1000, minimum=1)
    cfg.pm_accel_gain = _take(sec, "pointmass", "accel_gain", float, 0.1, minimum=1e-9)
    cfg.pm_dt = _take(sec, "pointmass", "dt", float, 1.0, minimum=1e-9)
    cfg.pm_max_speed = _take(sec, "pointmass", "max_speed", float, 1.0, minimum=1e-9)
    cfg.pm_reset_noise = _take(sec, "pointmass", "reset_noise", float, 0.1, minimum=0.0)
    cfg.pm_q_bins = _take(sec, "pointmass", "q_bins", int, 100, minimum=1)
    cfg.pm_q_bound = _take(sec, "pointmass", "q_bound", float, 1000.0, minimum=1e-9)
    cfg.pm_coverage_bins = _take(sec, "pointmass", "coverage_bins", int, 100, minimum=1)
    cfg.pm_coverage_bound = _take(sec, "pointmass", "coverage_bound", float,
                                  1000.0, minimum=1e-9)
    _reject_unknown(sec, "pointmass")

    sec = dict(_expect_mapping(root.pop("encoder", None), "encoder"))
    cfg.encoder_mode = _take(sec, "encoder", "mode", str, "identity",
                             choices={"identity", "random"})
    cfg.encoder_scale = _take(sec, "encoder", "scale", float, 1.0, minimum=1e-12)
    cfg.encoder_seed = _take(sec, "encoder", "seed", int, 0)
    cfg.encoder_out_dim = _take(sec, "encoder", "out_dim", int, 2, minimum=1)
    _reject_unknown(sec, "encoder")

    sec = dict(_expect_mapping(root.pop("estimator", None), "estimator"))
    kind = _take(sec, "estimator", "kind", str, "kde",
                 choices={"kde", "knn", "renyi"})
    cfg.estimator = EstimatorChoice(
        kind=EstimatorKind(kind),
        sigma=_take(sec, "estimator", "sigma", float, 1.0, minimum=1e-12),
        k=_take(sec, "estimator", "k", int, 5, minimum=1),
        alpha=_take(sec, "estimator", "alpha", float, 3.0, minimum=1e-9),
        subsample_cap=_take(sec, "estimator", "subsample_cap", int, 256, minimum=1))
    if cfg.estimator.kind == EstimatorKind.RENYI and cfg.estimator.alpha == 1.0:
        raise ConfigError("estimator.alpha", "must not equal 1 (use e.g. 1.001)")
    _reject_unknown(sec, "estimator")

    sec = dict(_expect_mapping(root.pop("rewards", None), "rewards"))
    mode = _take(sec, "rewards", "mode", str, "combined",
                 choices={m.value for m in RewardMode})
    cfg.reward_mode = RewardMode(mode)
    episodic_mode = _take(sec, "rewards", "episodic_mode", str,
                          "per_episode_constant",
                          choices={m.value for m in EpisodicMode})
    normalization = _take(sec, "rewards", "normalization", str, "minmax_batch",
                          choices={n.value for n in Normalization})
    distance = _take(sec, "rewards", "lifelong_distance", str, "vector_norm",
                     choices={d.value for d in LifelongDistance})
    cfg.reward = RewardConfig(
        beta=_take(sec, "rewards", "beta", float, 0.5, minimum=0.0),
        k_lifelong=_take(sec, "rewards", "k_lifelong", int, 3, minimum=1),
        normalization=Normalization(normalization),
        episodic_mode=EpisodicMode(episodic_mode),
        lifelong_distance=LifelongDistance(distance),
        empty_graph_reward=_take(sec, "rewards", "empty_graph_reward", float,
                                 math.log(2.0), minimum=0.0))
    _reject_unknown(sec, "rewards")

    sec = dict(_expect_mapping(root.pop("search", None), "search"))
    cfg.search = SearchConfig(
        r1=_take(sec, "search", "r1", int, 20, minimum=1),
        r2=_take(sec, "search", "r2", int, 20, minimum=1),
        depth=_take(sec, "search", "depth", int, 2, minimum=1))
    _reject_unknown(sec, "search")

    sec = dict(_expect_mapping(root.pop("schedule", None), "schedule"))
    u = _take(sec, "schedule", "u", int, 50_000, minimum=1)
    t_u = _take(sec, "schedule", "t_u", int, 5_000, minimum=1)
    total = _take(sec, "schedule", "total_steps", int, 200_000, minimum=1)
    if t_u > u:
        raise ConfigError("schedule.t_u", f"must be <= u ({u}), got {t_u}")
    cfg.schedule = ScheduleConfig(u=u, t_u=t_u, total_steps=total)
    _reject_unknown(sec, "schedule")

    sec = dict(_expect_mapping(root.pop("agent", None), "agent"))
    cfg.agent = AgentParams(
        learning_rate=_take(sec, "agent", "learning_rate", float, 0.1,
                            minimum=1e-9, maximum=1.0),
        gamma=_take(sec, "agent", "gamma", float, 0.99, minimum=0.0,
                    maximum=0.999999),
        epsilon_start=_take(sec, "agent", "epsilon_start", float, 0.1,
                            minimum=0.0, maximum=1.0),
        epsilon_end=_take(sec, "agent", "epsilon_end", float, 0.01,
                          minimum=0.0, maximum=1.0),
        batch_size=_take(sec, "agent", "batch_size", int, 128, minimum=1),
        updates_per_episode=_take(sec, "agent", "updates_per_episode", int,
                                  None, minimum=0, allow_none=True),
        replay_capacity=_take(sec, "agent", "replay_capacity", int, None,
                              minimum=1, allow_none=True))
    _reject_unknown(sec, "agent")

    sec = dict(_expect_mapping(root.pop("eval", None), "eval"))
    cfg.eval_cap = _take(sec, "eval", "subsample_cap", int, 256, minimum=1)
    snaps = sec.pop("snapshot_episodes", [5, 50, 300])
    if not isinstance(snaps, list) or not all(
            isinstance(s, int) and not isinstance(s, bool) and s >= 1 for s in snaps):
        raise ConfigError("eval.snapshot_episodes",
                          f"expected a list of positive integers, got {snaps!r}")
    cfg.snapshot_episodes = tuple(snaps)
    _reject_unknown(sec, "eval")

    seeds = root.pop("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("seeds", f"expected a nonempty list of integers, got {seeds!r}")
    cfg.seeds = tuple(seeds)

    cfg.output_dir = _take(root, "", "output_dir", str, "out")
    _reject_unknown(root, "")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML experiment config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML in {path}: {exc}")
    return parse_config(raw)
