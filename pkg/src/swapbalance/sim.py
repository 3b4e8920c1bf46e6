"""Deterministic two-player forage-survival matches.

A match is fully determined by ``(level, config, seed)``. Every tick runs these
phases in order:

1. both players choose a move from the same pre-move state;
2. moves are applied (a move into stone, water or off the grid is a stay);
3. a player with a 4-neighbour water tile refills water;
4. a player standing on forest eats it: food is refilled, ``food_collected``
   increments and the tile becomes scrub;
5. food and water drop by one; if either is empty health drops by
   ``starve_damage``;
6. if both food and water are above ``regen_threshold`` of their maxima,
   health regenerates by ``regen_amount`` (capped);
7. every scrub tile reverts to forest with probability ``scrub_respawn_prob``,
   using the counter-based draw ``uniform(match_seed, tick, cell)`` (see
   :mod:`swapbalance.rng`), where ``tick`` is the count before this tick;
8. players with health <= 0 die; the tick counter advances.

The match ends after the first tick on which a player has collected
``food_goal`` forests (those players win), a player has died (the survivor
wins, both if both died) or ``max_ticks`` is reached (all living players win).

Trace format (``run_match(..., trace=list)``): one line per tick::

    t=<tick> p0=<row>,<col> h=<health> f=<food> w=<water> c=<collected> | p1=...

where ``t`` is the tick count after the tick has been applied.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import lru_cache
from typing import Callable, Sequence

from .level import Level, Position, TileKind, passable, path_exists
from .rng import CounterRNG

FOREST = TileKind.FOREST
SCRUB = TileKind.SCRUB
_UNREACHABLE = -1


class InvalidLevelError(ValueError):
    """The level cannot be played (wrong spawn count or disconnected spawns)."""


class Move(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3
    STAY = 4


_DELTAS = {Move.N: (-1, 0), Move.E: (0, 1), Move.S: (1, 0), Move.W: (0, -1), Move.STAY: (0, 0)}


@dataclass(frozen=True)
class SimConfig:
    max_health: int = 10
    max_food: int = 10
    max_water: int = 10
    starve_damage: int = 1
    regen_amount: int = 1
    regen_threshold: float = 0.5
    scrub_respawn_prob: float = 0.025
    food_goal: int = 5
    max_ticks: int = 200
    forage_threshold: float = 0.5

    def __post_init__(self):
        for name in ("max_health", "max_food", "max_water", "starve_damage",
                     "regen_amount", "food_goal", "max_ticks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("regen_threshold", "scrub_respawn_prob", "forage_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class PlayerState:
    pos: Position
    health: int
    food: int
    water: int
    food_collected: int = 0
    alive: bool = True


@dataclass(frozen=True)
class Geometry:
    """Static movement structure of a level; passability never changes in a match."""

    width: int
    height: int
    # per cell: list of (Move, neighbour index) for passable neighbours, N/E/S/W order
    steps: tuple[tuple[tuple[Move, int], ...], ...]
    # all-pairs BFS distances over passable cells, -1 where unreachable
    dist: tuple[tuple[int, ...], ...]
    water_adjacent: tuple[bool, ...]
    water_targets: tuple[int, ...]


@dataclass
class GameState:
    terrain: list[TileKind]
    players: list[PlayerState]
    tick: int
    rng: CounterRNG
    geometry: Geometry = field(repr=False, compare=False)

    @property
    def width(self) -> int:
        return self.geometry.width

    def terrain_level(self) -> Level:
        return Level(self.geometry.width, self.geometry.height, tuple(self.terrain))

    def copy(self) -> "GameState":
        return GameState(
            list(self.terrain),
            [replace(p) for p in self.players],
            self.tick,
            self.rng.copy(),
            self.geometry,
        )


@dataclass(frozen=True)
class PlayerStats:
    health: int
    food: int
    water: int
    food_collected: int
    alive: bool


@dataclass(frozen=True)
class MatchOutcome:
    winners: frozenset[int]
    ticks: int
    players: tuple[PlayerStats, PlayerStats]
    reason: str  # "food_goal" | "death" | "tick_cap"


Policy = Callable[[GameState, int, SimConfig], Move]


def _build_geometry(level: Level) -> Geometry:
    w, h = level.width, level.height
    n = w * h
    ok = [passable(k) for k in level.cells]
    steps = []
    for i in range(n):
        r, c = divmod(i, w)
        out = []
        for move in (Move.N, Move.E, Move.S, Move.W):
            dr, dc = _DELTAS[move]
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and ok[nr * w + nc]:
                out.append((move, nr * w + nc))
        steps.append(tuple(out))

    dist = []
    for src in range(n):
        row = [_UNREACHABLE] * n
        if ok[src]:
            row[src] = 0
            queue = deque([src])
            while queue:
                cur = queue.popleft()
                for _, nxt in steps[cur]:
                    if row[nxt] == _UNREACHABLE:
                        row[nxt] = row[cur] + 1
                        queue.append(nxt)
        dist.append(tuple(row))

    water_adj = []
    for i in range(n):
        pos = level.position(i)
        water_adj.append(ok[i] and any(level[q] == TileKind.WATER for q in level.neighbors(pos)))
    return Geometry(
        w, h, tuple(steps), tuple(dist), tuple(water_adj),
        tuple(i for i in range(n) if water_adj[i]),
    )


@lru_cache(maxsize=4096)
def prepare_level(level: Level) -> tuple[Geometry, tuple[int, int], tuple[TileKind, ...]]:
    """Validate ``level`` and return its geometry, spawn cells and start terrain."""
    spawns = level.positions_of(TileKind.PLAYER_SPAWN)
    if len(spawns) != 2:
        raise InvalidLevelError(f"level needs exactly 2 player spawns, found {len(spawns)}")
    if not path_exists(level, spawns[0], spawns[1]):
        raise InvalidLevelError("player spawns are not connected by a passable path")
    terrain = tuple(TileKind.GRASS if k == TileKind.PLAYER_SPAWN else k for k in level.cells)
    geo = _build_geometry(Level(level.width, level.height, terrain))
    return geo, (level.index(spawns[0]), level.index(spawns[1])), terrain


def init_match(level: Level, config: SimConfig, seed: int) -> GameState:
    geo, spawns, terrain = prepare_level(level)
    players = [
        PlayerState(level.position(cell), config.max_health, config.max_food, config.max_water)
        for cell in spawns
    ]
    return GameState(list(terrain), players, 0, CounterRNG(seed), geo)


def _step_toward(geo: Geometry, src: int, targets: Sequence[int]) -> Move | None:
    drow = geo.dist[src]
    best, best_d = -1, 1 << 30
    for t in targets:
        d = drow[t]
        if 0 <= d < best_d:
            best, best_d = t, d
    if best < 0:
        return None
    if best_d == 0:
        return Move.STAY
    back = geo.dist[best]
    for move, nxt in geo.steps[src]:
        if back[nxt] == best_d - 1:
            return move
    return None  # pragma: no cover - BFS distances guarantee a descending neighbour


def _forest_cells(state: GameState) -> list[int]:
    return [i for i, k in enumerate(state.terrain) if k == FOREST]


def forage_policy(state: GameState, player_index: int,
                  config: SimConfig = SimConfig(), _forests: list[int] | None = None) -> Move:
    """Scripted forager: head for food when hungry, water when thirsty, else food.

    Targets are the nearest forest tile or the nearest passable tile next to
    water, by BFS distance; distance ties go to the lowest row-major index and
    path ties to the first of N, E, S, W. A target that cannot be reached is
    skipped in favour of the next one; with nothing reachable the player stays.
    """
    player = state.players[player_index]
    if not player.alive:
        return Move.STAY
    geo = state.geometry
    src = player.pos[0] * geo.width + player.pos[1]
    forests = _forests if _forests is not None else _forest_cells(state)
    hungry = player.food < config.forage_threshold * config.max_food
    thirsty = player.water < config.forage_threshold * config.max_water
    order = [forests, geo.water_targets] if hungry or not thirsty else [geo.water_targets, forests]
    for targets in order:
        move = _step_toward(geo, src, targets)
        if move is not None:
            return move
    return Move.STAY


def _advance(state: GameState, config: SimConfig, policies: Sequence[Policy] | None) -> None:
    geo = state.geometry
    w = geo.width
    players = state.players
    terrain = state.terrain

    # (1) decisions from the shared pre-move state
    if policies is None:
        forests = _forest_cells(state)
        moves = [forage_policy(state, i, config, forests) for i in range(2)]
    else:
        moves = [policies[i](state, i, config) if players[i].alive else Move.STAY
                 for i in range(2)]

    # (2) movement
    cells = []
    for p, move in zip(players, moves):
        cell = p.pos[0] * w + p.pos[1]
        if p.alive and move != Move.STAY:
            for m, nxt in geo.steps[cell]:
                if m == move:
                    cell = nxt
                    p.pos = Position(*divmod(nxt, w))
                    break
        cells.append(cell)

    # (3) water refill by adjacency
    for p, cell in zip(players, cells):
        if p.alive and geo.water_adjacent[cell]:
            p.water = config.max_water

    # (4) forest consumption, contested arrivals resolved deterministically
    eaters = [i for i in range(2) if players[i].alive and terrain[cells[i]] == FOREST]
    if len(eaters) == 2 and cells[0] == cells[1]:
        a, b = players[0].food_collected, players[1].food_collected
        if a != b:
            eaters = [0 if a < b else 1]
        else:
            eaters = [0 if state.tick % 2 == 0 else 1]
    for i in eaters:
        p = players[i]
        p.food = config.max_food
        p.food_collected += 1
        terrain[cells[i]] = SCRUB

    # (5) depletion, (6) regeneration
    regen_food = config.regen_threshold * config.max_food
    regen_water = config.regen_threshold * config.max_water
    for p in players:
        if not p.alive:
            continue
        p.food = max(0, p.food - 1)
        p.water = max(0, p.water - 1)
        if p.food == 0 or p.water == 0:
            p.health -= config.starve_damage
        if p.food > regen_food and p.water > regen_water:
            p.health = min(config.max_health, p.health + config.regen_amount)

    # (7) scrub respawn
    prob = config.scrub_respawn_prob
    rng = state.rng
    for i, k in enumerate(terrain):
        if k == SCRUB and rng.uniform(state.tick, i) < prob:
            terrain[i] = FOREST

    # (8) deaths
    for p in players:
        if p.alive and p.health <= 0:
            p.health = 0
            p.alive = False
    state.tick += 1


def tick(state: GameState, config: SimConfig, policies: Sequence[Policy] | None = None) -> GameState:
    """Return the state one tick later; ``state`` itself is left untouched."""
    nxt = state.copy()
    _advance(nxt, config, policies)
    return nxt


def _decide(state: GameState, config: SimConfig) -> tuple[frozenset[int], str] | None:
    players = state.players
    goal = [i for i, p in enumerate(players) if p.food_collected >= config.food_goal]
    if goal:
        return frozenset(goal), "food_goal"
    if not all(p.alive for p in players):
        alive = [i for i, p in enumerate(players) if p.alive]
        return frozenset(alive or (0, 1)), "death"
    if state.tick >= config.max_ticks:
        return frozenset(i for i, p in enumerate(players) if p.alive), "tick_cap"
    return None


def format_trace_line(state: GameState) -> str:
    parts = []
    for i, p in enumerate(state.players):
        parts.append(
            f"p{i}={p.pos[0]},{p.pos[1]} h={p.health} f={p.food} w={p.water} c={p.food_collected}"
        )
    return f"t={state.tick} " + " | ".join(parts)


def run_match(level: Level, config: SimConfig, seed: int,
              policies: Sequence[Policy] | None = None,
              trace: list[str] | None = None) -> MatchOutcome:
    state = init_match(level, config, seed)
    while True:
        _advance(state, config, policies)
        if trace is not None:
            trace.append(format_trace_line(state))
        decided = _decide(state, config)
        if decided is not None:
            winners, reason = decided
            stats = tuple(
                PlayerStats(p.health, p.food, p.water, p.food_collected, p.alive)
                for p in state.players
            )
            return MatchOutcome(winners, state.tick, stats, reason)
