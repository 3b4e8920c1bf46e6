"""Swap-based balancing MDP in three representations.

* ``swap-narrow``: two random distinct cells are presented each step; the
  action ``[2]`` decides whether to swap them.
* ``swap-turtle``: two agent-controlled cursors; action ``[4, 4, 2]`` is a
  direction for each cursor (N, E, S, W, clamped at the border) and a swap
  flag. When the flag is set the cursors swap their tiles and stay put.
* ``swap-wide``: action ``[w, h, w, h, 2]`` addresses two cells as
  ``(col, row)`` pairs plus a swap flag.

A requested swap is executed only when the two tiles differ and the swapped
level is still playable. Non-executed steps earn exactly zero reward and do
not touch the simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .balance import BalanceOracle, RewardConfig, compute_reward, is_balanced
from .generator import validate
from .level import Level, Position
from .observation import encode_obs, obs_length
from .sim import InvalidLevelError, SimConfig

_DIRS = ((-1, 0), (0, 1), (1, 0), (0, -1))


class Representation(str, Enum):
    NARROW = "swap-narrow"
    TURTLE = "swap-turtle"
    WIDE = "swap-wide"

    @classmethod
    def parse(cls, value: "str | Representation") -> "Representation":
        try:
            return cls(value)
        except ValueError:
            valid = ", ".join(r.value for r in cls)
            raise ValueError(f"unknown representation {value!r}; valid values: {valid}") from None


def action_space(representation: Representation | str, width: int, height: int) -> tuple[int, ...]:
    rep = Representation.parse(representation)
    if rep is Representation.NARROW:
        return (2,)
    if rep is Representation.TURTLE:
        return (4, 4, 2)
    return (width, height, width, height, 2)


def action_space_size(representation: Representation | str, width: int, height: int) -> int:
    return math.prod(action_space(representation, width, height))


@dataclass(frozen=True)
class EnvConfig:
    representation: Representation = Representation.NARROW
    width: int = 6
    height: int = 6
    max_steps: int = 60
    max_changes: int = 8
    n_sims: int = 14
    sim_seed: int = 0
    reward: RewardConfig = field(default_factory=RewardConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        object.__setattr__(self, "representation", Representation.parse(self.representation))
        if self.max_changes > self.max_steps:
            raise ValueError("max_changes must not exceed max_steps")
        if self.max_steps < 1 or self.max_changes < 1:
            raise ValueError("step and change caps must be positive")
        if self.n_sims < 2 or self.n_sims % 2:
            raise ValueError("n_sims must be even and >= 2")

    @property
    def action_components(self) -> tuple[int, ...]:
        return action_space(self.representation, self.width, self.height)

    @property
    def obs_length(self) -> int:
        return obs_length(self.width, self.height)


@dataclass
class SwapEnvState:
    level: Level
    cursors: tuple[Position, Position] | None
    b_initial: float
    b_current: float
    steps: int = 0
    changes: int = 0
    done: bool = False
    reason: str | None = None


class SwapEnv:
    """One balancing episode at a time over a supplied level."""

    def __init__(self, cfg: EnvConfig = EnvConfig(), oracle: BalanceOracle | None = None):
        self.cfg = cfg
        self.oracle = oracle or BalanceOracle(cfg.sim, cfg.n_sims, cfg.sim_seed)
        self.state: SwapEnvState | None = None
        self.record: dict | None = None
        self._rng = np.random.default_rng(0)

    @property
    def action_components(self) -> tuple[int, ...]:
        return self.cfg.action_components

    def _random_cursors(self, level: Level) -> tuple[Position, Position]:
        n = level.width * level.height
        a, b = self._rng.choice(n, size=2, replace=False)
        return level.position(int(a)), level.position(int(b))

    def observe(self) -> np.ndarray:
        cursors = None if self.cfg.representation is Representation.WIDE else self.state.cursors
        return encode_obs(self.state.level, cursors)

    def reset(self, level: Level, seed: int = 0) -> np.ndarray:
        if (level.width, level.height) != (self.cfg.width, self.cfg.height):
            raise ValueError(
                f"level is {level.width}x{level.height}, env expects {self.cfg.width}x{self.cfg.height}"
            )
        report = validate(level)
        if not report.valid:
            what = "player count" if not report.player_count_ok else "spawn connectivity"
            raise InvalidLevelError(f"level fails the {what} constraint")
        self._rng = np.random.default_rng(seed)
        cursors = None
        if self.cfg.representation is not Representation.WIDE:
            cursors = self._random_cursors(level)
        b0 = self.oracle(level).b
        self.state = SwapEnvState(level, cursors, b0, b0)
        self.record = {"b0": b0, "b_final": b0, "actions": [], "swaps": [],
                       "reason": None, "steps": 0, "changes": 0}
        if is_balanced(b0, self.cfg.reward):
            self._finish("balanced")
        return self.observe()

    def _finish(self, reason: str) -> None:
        self.state.done = True
        self.state.reason = reason
        self.record.update(reason=reason, b_final=self.state.b_current,
                           steps=self.state.steps, changes=self.state.changes)

    def _decode(self, action) -> tuple[Position, Position] | None:
        """Return the cell pair to swap, or None, updating cursors as a side effect."""
        comps = self.action_components
        action = tuple(int(a) for a in np.atleast_1d(action))
        if len(action) != len(comps) or any(not 0 <= a < n for a, n in zip(action, comps)):
            raise ValueError(f"action {action} outside action space {comps}")
        st = self.state
        rep = self.cfg.representation
        if rep is Representation.NARROW:
            return st.cursors if action[0] == 1 else None
        if rep is Representation.TURTLE:
            if action[2] == 1:
                return st.cursors
            moved = []
            for cursor, d in zip(st.cursors, action[:2]):
                dr, dc = _DIRS[d]
                moved.append(Position(min(max(cursor.row + dr, 0), self.cfg.height - 1),
                                      min(max(cursor.col + dc, 0), self.cfg.width - 1)))
            st.cursors = (moved[0], moved[1])
            return None
        x1, y1, x2, y2, flag = action
        return (Position(y1, x1), Position(y2, x2)) if flag == 1 else None

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        st = self.state
        if st is None or st.done:
            raise RuntimeError("episode is over; call reset()")
        pair = self._decode(action)
        st.steps += 1
        self.record["actions"].append([int(a) for a in np.atleast_1d(action)])

        reward = 0.0
        outcome = "no_swap"
        if pair is not None:
            a, b = pair
            ka, kb = st.level[a], st.level[b]
            if a == b or ka == kb:
                outcome = "same_kind"
            else:
                candidate = st.level.swap(a, b)
                if not validate(candidate).valid:
                    outcome = "disconnects"
                else:
                    outcome = "executed"
                    b_prev = st.b_current
                    st.level = candidate
                    st.changes += 1
                    st.b_current = self.oracle(candidate).b
                    reward = compute_reward(b_prev, st.b_current, self.cfg.reward)
                    self.record["swaps"].append({
                        "step": st.steps, "a": [a.row, a.col], "b": [b.row, b.col],
                        "kinds": [ka.code, kb.code], "b_after": st.b_current,
                    })

        if self.cfg.representation is Representation.NARROW:
            st.cursors = self._random_cursors(st.level)

        if is_balanced(st.b_current, self.cfg.reward):
            self._finish("balanced")
        elif st.changes >= self.cfg.max_changes:
            self._finish("change_cap")
        elif st.steps >= self.cfg.max_steps:
            self._finish("step_cap")
        info = {"outcome": outcome, "b": st.b_current, "steps": st.steps,
                "changes": st.changes, "reason": st.reason}
        return self.observe(), reward, st.done, info


class LevelPoolEnv:
    """Training wrapper: each reset draws a level that is not already balanced."""

    def __init__(self, levels: list[Level], cfg: EnvConfig = EnvConfig(), seed: int = 0,
                 oracle: BalanceOracle | None = None):
        if not levels:
            raise ValueError("level pool is empty")
        self.env = SwapEnv(cfg, oracle)
        self.levels = list(levels)
        self._rng = np.random.default_rng(seed)

    @property
    def action_components(self) -> tuple[int, ...]:
        return self.env.action_components

    @property
    def obs_length(self) -> int:
        return self.env.cfg.obs_length

    def reset(self) -> np.ndarray:
        for _ in range(100 * len(self.levels)):
            level = self.levels[int(self._rng.integers(len(self.levels)))]
            obs = self.env.reset(level, seed=int(self._rng.integers(2**31)))
            if not self.env.state.done:
                return obs
        raise RuntimeError("every level in the pool is already balanced")

    def step(self, action):
        return self.env.step(action)
