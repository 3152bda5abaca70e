"""Desk-scale exploration environments.

Two worlds, both reward-free: a discrete wall maze parsed from text (agent
starts at 'S', episodes run a fixed step budget and teleport back to start),
and a continuous 2-D point mass with velocity clipping, which stands in for
an agent that can head off in any direction. Both expose the small duck-type
the training loop needs: ``reset``/``step``, a hashable ``state_key`` for
tabular value tables, and a ``coverage_cell`` for unique-state counting.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .errors import InvalidArgument, ParseError

__all__ = [
    "MAZE_ACTIONS", "Maze", "maze_load", "bundled_maze", "maze_step",
    "PointMassWorld", "pointmass_step", "discretize", "COMPASS_ACTIONS",
]

# up, down, left, right
MAZE_ACTIONS: tuple[tuple[int, int], ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))

# 8 compass directions for the tabular point-mass agent
COMPASS_ACTIONS: tuple[tuple[float, float], ...] = tuple(
    (math.cos(a), math.sin(a)) for a in (i * math.pi / 4 for i in range(8)))


def discretize(position, bounds: tuple[float, float], bins: int) -> int:
    """Uniform square binning of a 2-D position into a single cell id.

    ``bounds`` is (low, high) applied to both axes; out-of-range points are
    clamped to the edge bins. The id is ``row * bins + col`` with row from
    the first coordinate.
    """
    if bins < 1:
        raise InvalidArgument(f"bins must be >= 1, got {bins}")
    lo, hi = float(bounds[0]), float(bounds[1])
    if not hi > lo:
        raise InvalidArgument(f"degenerate bounds ({lo}, {hi})")
    p = np.asarray(position, dtype=np.float64).reshape(-1)
    if p.shape[0] != 2:
        raise InvalidArgument(f"position must be 2-d, got shape {p.shape}")
    span = hi - lo
    row = int((p[0] - lo) / span * bins)
    col = int((p[1] - lo) / span * bins)
    row = min(max(row, 0), bins - 1)
    col = min(max(col, 0), bins - 1)
    return row * bins + col


class Maze:
    """Rectangular wall maze over unit cells.

    Walkable cells are '.' (or 'S' for the unique start). Moves into walls
    or off the grid are no-ops. There are no terminal states; episodes end
    after ``max_steps`` and restart from 'S'.
    """

    def __init__(self, walls: np.ndarray, start: tuple[int, int], max_steps: int = 700):
        walls = np.asarray(walls, dtype=bool)
        if walls.ndim != 2:
            raise InvalidArgument("walls must be a 2-d boolean grid")
        if walls[start]:
            raise InvalidArgument(f"start cell {start} is a wall")
        if max_steps < 1:
            raise InvalidArgument(f"max_steps must be >= 1, got {max_steps}")
        self.walls = walls
        self.height, self.width = walls.shape
        self.start = (int(start[0]), int(start[1]))
        self.max_steps = int(max_steps)
        self._cell = self.start

    # --- pure helpers -----------------------------------------------------

    def is_free(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and not self.walls[r, c]

    def free_cells(self) -> list[tuple[int, int]]:
        rs, cs = np.nonzero(~self.walls)
        return list(zip(rs.tolist(), cs.tolist()))

    def reachable_from_start(self) -> set[tuple[int, int]]:
        seen = {self.start}
        frontier = [self.start]
        while frontier:
            cell = frontier.pop()
            for a in range(4):
                nxt = maze_step(self, cell, a)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    # --- agent-facing surface ---------------------------------------------

    n_actions = 4

    @property
    def episode_len(self) -> int:
        return self.max_steps

    @property
    def coverage_bins(self) -> int:
        return max(self.width, self.height)

    @property
    def coverage_shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def reset(self, rng=None) -> np.ndarray:
        self._cell = self.start
        return np.asarray(self._cell, dtype=np.float64)

    def step(self, action: int) -> np.ndarray:
        self._cell = maze_step(self, self._cell, action)
        return np.asarray(self._cell, dtype=np.float64)

    def state_key(self, obs) -> tuple[int, int]:
        return (int(round(obs[0])), int(round(obs[1])))

    def coverage_cell(self, obs) -> int:
        return int(round(obs[0])) * self.width + int(round(obs[1]))

    def enumerate_states(self):
        """Free cells as observations, keys, grid shape and flat ids."""
        cells = self.free_cells()
        obs = np.asarray(cells, dtype=np.float64)
        keys = [(r, c) for r, c in cells]
        ids = [r * self.width + c for r, c in cells]
        return obs, keys, (self.height, self.width), ids


def maze_step(m: Maze, cell: tuple[int, int], action: int) -> tuple[int, int]:
    """One move; blocked moves (wall or off-grid) keep the agent in place."""
    if not m.is_free(cell):
        raise InvalidArgument(f"cell {cell} is not a free cell")
    if not 0 <= int(action) < 4:
        raise InvalidArgument(f"action must be in 0..3, got {action}")
    dr, dc = MAZE_ACTIONS[int(action)]
    target = (cell[0] + dr, cell[1] + dc)
    return target if m.is_free(target) else (cell[0], cell[1])


def maze_load(text: str, max_steps: int = 700) -> Maze:
    """Parse a maze from text: '#' wall, '.' free, 'S' the unique start."""
    lines = text.splitlines()
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise ParseError("empty maze text", line=1, column=1)
    width = len(lines[0])
    if width == 0:
        raise ParseError("empty first row", line=1, column=1)
    walls = np.zeros((len(lines), width), dtype=bool)
    start = None
    for i, line in enumerate(lines):
        if len(line) != width:
            raise ParseError(
                f"ragged row: expected width {width}, got {len(line)}",
                line=i + 1, column=len(line) + 1)
        for j, ch in enumerate(line):
            if ch == "#":
                walls[i, j] = True
            elif ch == "S":
                if start is not None:
                    raise ParseError("duplicate start cell 'S'",
                                     line=i + 1, column=j + 1)
                start = (i, j)
            elif ch != ".":
                raise ParseError(f"unexpected character {ch!r}",
                                 line=i + 1, column=j + 1)
    if start is None:
        raise ParseError("no start cell 'S'", line=len(lines), column=1)
    return Maze(walls, start, max_steps=max_steps)


def bundled_maze(max_steps: int = 700) -> Maze:
    """The packaged 20x20 maze (corridors plus dead ends, start top-left)."""
    text = resources.files("element").joinpath("assets/maze20.txt").read_text()
    return maze_load(text, max_steps=max_steps)


class PointMassWorld:
    """Continuous 2-D point mass under acceleration control.

    Velocity is clipped to ``max_speed`` after every step, so a straight
    line policy covers about ``max_speed * episode_len`` distance units.
    Resets drop the agent uniformly inside a ``reset_noise`` disk around the
    origin with zero velocity. No termination condition exists; episodes are
    fixed length.
    """

    n_actions = len(COMPASS_ACTIONS)

    def __init__(self, episode_len: int = 1000, accel_gain: float = 0.1,
                 dt: float = 1.0, max_speed: float = 1.0,
                 reset_noise: float = 0.1, q_bins: int = 100,
                 q_bound: float = 1000.0, coverage_bins: int = 100,
                 coverage_bound: float = 1000.0):
        if episode_len < 1:
            raise InvalidArgument(f"episode_len must be >= 1, got {episode_len}")
        if max_speed <= 0 or accel_gain <= 0 or dt <= 0:
            raise InvalidArgument("accel_gain, dt and max_speed must be positive")
        if reset_noise < 0:
            raise InvalidArgument(f"reset_noise must be >= 0, got {reset_noise}")
        self.episode_len = int(episode_len)
        self.accel_gain = float(accel_gain)
        self.dt = float(dt)
        self.max_speed = float(max_speed)
        self.reset_noise = float(reset_noise)
        self.q_bins = int(q_bins)
        self.q_bound = float(q_bound)
        self.coverage_bins = int(coverage_bins)
        self.coverage_bound = float(coverage_bound)
        self.position = np.zeros(2)
        self.velocity = np.zeros(2)
        self.clamp_count = 0

    @property
    def coverage_shape(self) -> tuple[int, int]:
        return (self.coverage_bins, self.coverage_bins)

    def reset(self, rng=None) -> np.ndarray:
        if rng is None or self.reset_noise == 0.0:
            self.position = np.zeros(2)
        else:
            radius = self.reset_noise * math.sqrt(rng.random())
            angle = 2.0 * math.pi * rng.random()
            self.position = radius * np.array([math.cos(angle), math.sin(angle)])
        self.velocity = np.zeros(2)
        return self.position.copy()

    def step(self, action: int) -> np.ndarray:
        return pointmass_step(self, np.asarray(COMPASS_ACTIONS[int(action)]))

    def state_key(self, obs) -> int:
        return discretize(obs, (-self.q_bound, self.q_bound), self.q_bins)

    def coverage_cell(self, obs) -> int:
        return discretize(obs, (-self.coverage_bound, self.coverage_bound),
                          self.coverage_bins)


def pointmass_step(w: PointMassWorld, action) -> np.ndarray:
    """Accelerate by ``action`` (clamped to [-1, 1]^2) and advance one step."""
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape[0] != 2:
        raise InvalidArgument(f"action must be 2-d, got shape {a.shape}")
    if np.any(np.abs(a) > 1.0):
        w.clamp_count += 1
        a = np.clip(a, -1.0, 1.0)
    w.velocity = w.velocity + a * w.accel_gain
    speed = float(np.linalg.norm(w.velocity))
    if speed > w.max_speed:
        w.velocity *= w.max_speed / speed
    w.position = w.position + w.velocity * w.dt
    return w.position.copy()
