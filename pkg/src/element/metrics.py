"""Evaluation quantities and file emission.

The per-episode evaluation metric is the matrix-based entropy at alpha just
above 1 (a Shannon surrogate) over a deterministic subsample of the
episode, so values are comparable across episode lengths. Coverage counts
unique discretized cells over the whole run. Run logs round-trip through
CSV with 17 significant digits; heatmaps are 8-bit binary PGM.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entropy import EntropyValue, KernelConfig, renyi_matrix_entropy, subsample_states
from .envs import discretize
from .errors import InvalidArgument, ParseError

__all__ = [
    "EVAL_ALPHA", "CoverageCounter", "EpisodeRecord", "RunLog",
    "eval_episode_entropy", "coverage_update", "emit_csv", "parse_csv",
    "emit_heatmap",
]

EVAL_ALPHA = 1.001
EVAL_SIGMA = 1.0
EVAL_SUBSAMPLE = 256

CSV_COLUMNS = ("episode", "steps", "entropy_eval", "mean_r_ep", "mean_r_l",
               "graph_size", "unique_cells")
_INT_COLUMNS = {"episode", "steps", "graph_size", "unique_cells"}


def eval_episode_entropy(states, cap: int = EVAL_SUBSAMPLE) -> EntropyValue:
    """Episode evaluation metric: alpha=1.001 matrix entropy, sigma=1,
    deterministic subsampling to at most ``cap`` states."""
    sub = subsample_states(np.asarray(states, dtype=np.float64), cap)
    return renyi_matrix_entropy(sub, EVAL_ALPHA, KernelConfig(EVAL_SIGMA))


class CoverageCounter:
    """Unique visited cells with a (step, count) history."""

    def __init__(self, bins: int):
        if bins < 1:
            raise InvalidArgument(f"bins must be >= 1, got {bins}")
        self.bins = int(bins)
        self.visited: set[int] = set()
        self.history: list[tuple[int, int]] = []

    def visit(self, cell_id: int, step: int | None = None) -> int:
        self.visited.add(int(cell_id))
        if step is not None:
            self.history.append((int(step), len(self.visited)))
        return len(self.visited)

    @property
    def unique_count(self) -> int:
        return len(self.visited)


def coverage_update(counter: CoverageCounter, position,
                    bounds: tuple[float, float], step: int | None = None) -> int:
    """Discretize a position and record the visit; returns the unique count."""
    return counter.visit(discretize(position, bounds, counter.bins), step)


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    steps: int
    entropy_eval: float
    mean_r_ep: float
    mean_r_l: float
    graph_size: int
    unique_cells: int


@dataclass
class RunLog:
    """Per-episode records plus side products a run accumulates.

    Only ``records`` goes to CSV; the rest (reward-grid snapshots, raw
    episode entropies, trajectory endpoints and radii) feed verification
    and plotting.
    """

    records: list[EpisodeRecord] = field(default_factory=list)
    coverage_history: list[tuple[int, int]] = field(default_factory=list)
    reward_snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    entropy_raw: list[float] = field(default_factory=list)
    episode_endpoints: list[np.ndarray] = field(default_factory=list)
    episode_max_radius: list[float] = field(default_factory=list)
    coverage_grid: np.ndarray | None = None
    graph: object | None = None
    replay: object | None = None

    @property
    def n_episodes(self) -> int:
        return len(self.records)


def _format_value(column: str, value) -> str:
    if column in _INT_COLUMNS:
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(log: RunLog, path) -> None:
    """Write the per-episode records with a fixed header row."""
    lines = [",".join(CSV_COLUMNS)]
    for rec in log.records:
        lines.append(",".join(_format_value(c, getattr(rec, c)) for c in CSV_COLUMNS))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path) -> RunLog:
    """Read back a CSV produced by :func:`emit_csv`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ParseError(f"unexpected CSV header in {path}", line=1)
    records = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ParseError(f"expected {len(CSV_COLUMNS)} fields", line=i)
        kwargs = {}
        for col, part in zip(CSV_COLUMNS, parts):
            kwargs[col] = int(part) if col in _INT_COLUMNS else float(part)
        records.append(EpisodeRecord(**kwargs))
    return RunLog(records=records)


def emit_heatmap(grid: np.ndarray, path) -> None:
    """Write a matrix as binary PGM (P5), min mapped to 0 and max to 255.

    A constant grid maps to all zeros. Output is byte-deterministic for a
    given grid.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise InvalidArgument(f"grid must be a nonempty 2-d array, got {g.shape}")
    lo = float(g.min())
    hi = float(g.max())
    if hi == lo:
        pixels = np.zeros(g.shape, dtype=np.uint8)
    else:
        pixels = np.round((g - lo) / (hi - lo) * 255.0).astype(np.uint8)
    header = f"P5\n{g.shape[1]} {g.shape[0]}\n255\n".encode("ascii")
    try:
        Path(path).write_bytes(header + pixels.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write PGM to {path}: {exc}") from exc
