"""One-hot observation layout shared by the balancing and generator environments.

Layout (float64, flattened C-order from shape ``(7, height, width)``):

====== ==========================
plane  content
====== ==========================
0      grass
1      forest
2      stone
3      water
4      player spawn
5      first cursor (all zero when unused)
6      second cursor (all zero when unused)
====== ==========================
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .level import Level, Position, TileKind

TILE_PLANES = (TileKind.GRASS, TileKind.FOREST, TileKind.STONE, TileKind.WATER,
               TileKind.PLAYER_SPAWN)
N_PLANES = len(TILE_PLANES) + 2
_PLANE_OF = {kind: i for i, kind in enumerate(TILE_PLANES)}


def obs_length(width: int, height: int) -> int:
    return N_PLANES * width * height


def encode_obs(level: Level, cursors: Sequence[Position] | None = None) -> np.ndarray:
    obs = np.zeros((N_PLANES, level.height, level.width))
    for i, kind in enumerate(level.cells):
        if kind not in _PLANE_OF:
            raise ValueError(f"{kind.name} cannot appear in a balancing observation")
        r, c = divmod(i, level.width)
        obs[_PLANE_OF[kind], r, c] = 1.0
    if cursors is not None:
        for plane, (r, c) in zip((5, 6), cursors):
            obs[plane, r, c] = 1.0
    return obs.ravel()


def decode_obs(obs: np.ndarray, width: int, height: int) -> Level:
    planes = np.asarray(obs).reshape(N_PLANES, height, width)
    idx = planes[: len(TILE_PLANES)].argmax(axis=0).ravel()
    return Level(width, height, tuple(TILE_PLANES[i] for i in idx))
