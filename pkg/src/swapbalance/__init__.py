"""Swap-based balancing of two-player tile levels.

Modules: ``level`` (grid type and file format), ``sim`` (forage match engine),
``balance`` (balancing state, reward, calibration), ``generator`` (playable
level generation), ``swap_env`` (balancing MDP), ``policy``/``ppo`` (numpy
policy network and trainer), ``evaluation`` (datasets and metrics) and ``cli``.
"""

__version__ = "0.1.0"

from .balance import (BalanceEstimate, BalanceOracle, RewardConfig, calibrate_n, compute_b,
                      compute_reward, estimate_balance)
from .generator import GenConfig, generate, validate
from .level import Level, Position, TileKind, parse_level, render_ascii, serialize_level
from .sim import MatchOutcome, SimConfig, run_match
from .swap_env import EnvConfig, Representation, SwapEnv

__all__ = [
    "BalanceEstimate", "BalanceOracle", "EnvConfig", "GenConfig", "Level", "MatchOutcome",
    "Position", "Representation", "RewardConfig", "SimConfig", "SwapEnv", "TileKind",
    "calibrate_n", "compute_b", "compute_reward", "estimate_balance", "generate",
    "parse_level", "render_ascii", "run_match", "serialize_level", "validate",
]
