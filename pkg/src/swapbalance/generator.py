"""Playable level generation and the tile-placement generator MDP."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .level import Level, Position, TileKind, passable, path_exists
from .observation import encode_obs

TERRAIN_KINDS = (TileKind.GRASS, TileKind.FOREST, TileKind.STONE, TileKind.WATER)
PLACEABLE_KINDS = (TileKind.GRASS, TileKind.FOREST, TileKind.STONE, TileKind.WATER,
                   TileKind.PLAYER_SPAWN)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    width: int = 6
    height: int = 6
    # grass, forest, stone, water
    weights: tuple[float, float, float, float] = (0.3, 0.35, 0.25, 0.1)
    num_players: int = 2
    max_repair_attempts: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.num_players != 2:
            raise ValueError("num_players is fixed at 2")
        if len(self.weights) != 4 or any(w <= 0 for w in self.weights):
            raise ValueError("weights must be four positive numbers (grass, forest, stone, water)")
        if self.width < 2 or self.height < 2:
            raise ValueError("grid must be at least 2x2")

    @property
    def probabilities(self) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        return w / w.sum()


@dataclass(frozen=True)
class ValidityReport:
    player_count_ok: bool
    connected_ok: bool

    @property
    def valid(self) -> bool:
        return self.player_count_ok and self.connected_ok


def player_count(level: Level) -> int:
    return sum(1 for k in level.cells if k == TileKind.PLAYER_SPAWN)


def validate(level: Level) -> ValidityReport:
    spawns = level.positions_of(TileKind.PLAYER_SPAWN)
    if len(spawns) != 2:
        return ValidityReport(False, False)
    return ValidityReport(True, path_exists(level, spawns[0], spawns[1]))


def sample_terrain(cfg: GenConfig, rng: np.random.Generator) -> list[TileKind]:
    """I.i.d. terrain draw from the configured weights (no spawns, no repair)."""
    idx = rng.choice(len(TERRAIN_KINDS), size=cfg.width * cfg.height, p=cfg.probabilities)
    return [TERRAIN_KINDS[i] for i in idx]


def _carve_corridor(cells: list[TileKind], width: int, height: int,
                    a: int, b: int, rng: np.random.Generator) -> None:
    # 0-1 BFS: entering an impassable cell costs 1; neighbour order is shuffled
    # per expansion so ties between equally cheap corridors are broken randomly.
    n = width * height
    cost = [n + 1] * n
    parent = [-1] * n
    cost[a] = 0
    dq = deque([a])
    while dq:
        cur = dq.popleft()
        r, c = divmod(cur, width)
        nbrs = []
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width:
                nbrs.append(nr * width + nc)
        for j in rng.permutation(len(nbrs)):
            nxt = nbrs[j]
            step = 0 if passable(cells[nxt]) else 1
            if cost[cur] + step < cost[nxt]:
                cost[nxt] = cost[cur] + step
                parent[nxt] = cur
                if step:
                    dq.append(nxt)
                else:
                    dq.appendleft(nxt)
    cur = b
    while cur != a:
        if not passable(cells[cur]):
            cells[cur] = TileKind.GRASS
        cur = parent[cur]


def generate(cfg: GenConfig) -> Level:
    """Sample terrain, drop two spawns on passable cells, carve a grass corridor if needed."""
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.max_repair_attempts):
        cells = sample_terrain(cfg, rng)
        open_cells = [i for i, k in enumerate(cells) if passable(k)]
        if len(open_cells) < 2:
            continue
        a, b = (int(x) for x in rng.choice(open_cells, size=2, replace=False))
        cells[a] = cells[b] = TileKind.PLAYER_SPAWN
        level = Level(cfg.width, cfg.height, tuple(cells))
        if not validate(level).connected_ok:
            _carve_corridor(cells, cfg.width, cfg.height, a, b, rng)
            level = Level(cfg.width, cfg.height, tuple(cells))
        if validate(level).valid:
            return level
    raise GenerationError(f"no valid level after {cfg.max_repair_attempts} attempts")


def generator_reward(prev: Level, next: Level, target_players: int = 2) -> float:
    """Per-step generator reward: player-count improvement plus a path term.

    The path term is +1 when ``next`` has exactly two connected spawns, -1 when
    it has exactly two disconnected spawns and 0 otherwise.
    """
    if prev == next:
        return 0.0
    count_term = abs(target_players - player_count(prev)) - abs(target_players - player_count(next))
    report = validate(next)
    if not report.player_count_ok:
        path_term = 0
    else:
        path_term = 1 if report.connected_ok else -1
    return float(count_term + path_term)


@dataclass
class GeneratorEnv:
    """Wide-representation tile-placement MDP for training a generator.

    Actions are ``(row, col, kind_index)`` with ``kind_index`` into
    :data:`PLACEABLE_KINDS`. The episode ends once the level is valid or when
    the step or change cap is reached.
    """

    cfg: GenConfig = field(default_factory=GenConfig)
    max_steps: int = 100
    max_changes: int = 36
    level: Level | None = None
    steps: int = 0
    changes: int = 0
    done: bool = False

    @property
    def action_components(self) -> tuple[int, int, int]:
        return (self.cfg.height, self.cfg.width, len(PLACEABLE_KINDS))

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = np.random.default_rng(self.cfg.seed if seed is None else seed)
        self.level = Level(self.cfg.width, self.cfg.height, tuple(sample_terrain(self.cfg, rng)))
        self.steps = self.changes = 0
        self.done = False
        return encode_obs(self.level)

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        if self.level is None or self.done:
            raise RuntimeError("call reset() before step()")
        row, col, kind_index = (int(a) for a in action)
        if not (0 <= row < self.cfg.height and 0 <= col < self.cfg.width):
            raise ValueError(f"cell ({row}, {col}) out of range")
        if not 0 <= kind_index < len(PLACEABLE_KINDS):
            raise ValueError(f"tile index {kind_index} out of range")
        self.steps += 1
        prev = self.level
        pos = Position(row, col)
        kind = PLACEABLE_KINDS[kind_index]
        reward = 0.0
        if prev[pos] != kind:
            self.level = prev.replace({pos: kind})
            self.changes += 1
            reward = generator_reward(prev, self.level)
        valid = validate(self.level).valid
        self.done = valid or self.steps >= self.max_steps or self.changes >= self.max_changes
        info = {"valid": valid, "steps": self.steps, "changes": self.changes}
        return encode_obs(self.level), reward, self.done, info
