"""Tile vocabulary, the immutable ``Level`` grid, text/JSON formats and rendering.

Text format (canonical, produced by :func:`serialize_level`)::

    6 6
    GGFGGW
    GPGSGW
    ...

The first line holds ``<width> <height>``; each following line holds one row of
single-character tile codes. :func:`parse_level` additionally accepts the
header-less, space-separated grid produced by :func:`render_ascii`.

JSON form: ``{"width": w, "height": h, "cells": [id, ...]}`` with row-major
integer tile ids.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, NamedTuple, Sequence


class TileKind(IntEnum):
    GRASS = 0
    FOREST = 1
    SCRUB = 2
    STONE = 3
    WATER = 4
    PLAYER_SPAWN = 5

    @property
    def code(self) -> str:
        return _CODES[self]

    @classmethod
    def from_code(cls, ch: str) -> "TileKind":
        return _BY_CODE[ch]


_CODES = {
    TileKind.GRASS: "G",
    TileKind.FOREST: "F",
    TileKind.SCRUB: "C",
    TileKind.STONE: "S",
    TileKind.WATER: "W",
    TileKind.PLAYER_SPAWN: "P",
}
_BY_CODE = {v: k for k, v in _CODES.items()}

BLOCKING = frozenset({TileKind.STONE, TileKind.WATER})


def passable(kind: TileKind) -> bool:
    """Players may stand on every kind except stone and water."""
    return kind not in BLOCKING


class Position(NamedTuple):
    row: int
    col: int


class LevelParseError(ValueError):
    """Raised for malformed level text; carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Level:
    width: int
    height: int
    cells: tuple[TileKind, ...]

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(f"level must be at least 2x2, got {self.width}x{self.height}")
        cells = tuple(TileKind(c) for c in self.cells)
        if len(cells) != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} cells, got {len(cells)}"
            )
        object.__setattr__(self, "cells", cells)

    @classmethod
    def filled(cls, width: int, height: int, kind: TileKind = TileKind.GRASS) -> "Level":
        return cls(width, height, (kind,) * (width * height))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "Level":
        """Build from a list of code strings, e.g. ``["GG", "GW"]``."""
        return parse_level("\n".join(rows))

    def index(self, pos: Position) -> int:
        return pos[0] * self.width + pos[1]

    def position(self, index: int) -> Position:
        return Position(*divmod(index, self.width))

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos[0] < self.height and 0 <= pos[1] < self.width

    def __getitem__(self, pos: Position) -> TileKind:
        if not self.in_bounds(pos):
            raise IndexError(f"position {tuple(pos)} outside {self.width}x{self.height} level")
        return self.cells[self.index(pos)]

    def replace(self, changes: dict[Position, TileKind]) -> "Level":
        cells = list(self.cells)
        for pos, kind in changes.items():
            if not self.in_bounds(pos):
                raise IndexError(f"position {tuple(pos)} out of bounds")
            cells[self.index(pos)] = TileKind(kind)
        return Level(self.width, self.height, tuple(cells))

    def swap(self, a: Position, b: Position) -> "Level":
        return self.replace({a: self[b], b: self[a]})

    def positions_of(self, kind: TileKind) -> list[Position]:
        return [self.position(i) for i, c in enumerate(self.cells) if c == kind]

    def neighbors(self, pos: Position) -> Iterator[Position]:
        """In-bounds 4-neighbours in N, E, S, W order."""
        r, c = pos
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < self.height and 0 <= nc < self.width:
                yield Position(nr, nc)

    def key(self) -> bytes:
        """Compact hashable identity, used for memoisation."""
        return bytes([self.width, self.height]) + bytes(int(c) for c in self.cells)

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "cells": [int(c) for c in self.cells]}

    @classmethod
    def from_json(cls, obj: dict) -> "Level":
        return cls(int(obj["width"]), int(obj["height"]), tuple(obj["cells"]))

    def __str__(self) -> str:
        return render_ascii(self)


def path_exists(level: Level, a: Position, b: Position) -> bool:
    """True iff a 4-connected path over passable tiles joins ``a`` and ``b``."""
    for p in (a, b):
        if not level.in_bounds(p):
            raise IndexError(f"position {tuple(p)} out of bounds")
    a, b = Position(*a), Position(*b)
    if a == b:
        return True
    if not (passable(level[a]) and passable(level[b])):
        return False
    seen = {a}
    queue = deque([a])
    while queue:
        cur = queue.popleft()
        for nxt in level.neighbors(cur):
            if nxt in seen or not passable(level[nxt]):
                continue
            if nxt == b:
                return True
            seen.add(nxt)
            queue.append(nxt)
    return False


def count_tiles(level: Level) -> dict[TileKind, int]:
    counts = Counter(level.cells)
    return {kind: counts.get(kind, 0) for kind in TileKind}


def serialize_level(level: Level) -> str:
    rows = [
        "".join(c.code for c in level.cells[r * level.width:(r + 1) * level.width])
        for r in range(level.height)
    ]
    return f"{level.width} {level.height}\n" + "\n".join(rows) + "\n"


def parse_level(text: str) -> Level:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise LevelParseError("empty level text", 1)

    first = lines[0].split()
    header: tuple[int, int] | None = None
    start = 0
    if len(first) == 2 and all(tok.isdigit() for tok in first):
        header = (int(first[0]), int(first[1]))
        start = 1

    rows: list[list[TileKind]] = []
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        row = []
        for col, ch in enumerate(raw, start=1):
            if ch in " \t":
                continue
            if ch not in _BY_CODE:
                raise LevelParseError(f"unknown tile code {ch!r}", lineno, col)
            row.append(_BY_CODE[ch])
        if rows and len(row) != len(rows[0]):
            raise LevelParseError(
                f"ragged row: expected {len(rows[0])} tiles, found {len(row)}", lineno
            )
        rows.append(row)

    if not rows:
        raise LevelParseError("no grid rows", start + 1)
    width, height = len(rows[0]), len(rows)
    if header is not None and header != (width, height):
        raise LevelParseError(
            f"header declares {header[0]}x{header[1]} but grid is {width}x{height}", 1
        )
    try:
        return Level(width, height, tuple(k for row in rows for k in row))
    except ValueError as exc:
        raise LevelParseError(str(exc), 1) from exc


def render_ascii(level: Level, highlight: Iterable[Position] | None = None) -> str:
    """Render one code per cell.

    Without ``highlight`` each row is the codes joined by single spaces
    (``"G W S"``). With ``highlight`` every cell takes three characters:
    ``"[G]"`` for highlighted positions and ``" G "`` otherwise.
    """
    lines = []
    if highlight is None:
        for r in range(level.height):
            lines.append(" ".join(level[Position(r, c)].code for c in range(level.width)))
    else:
        marked = {Position(*p) for p in highlight}
        for r in range(level.height):
            cells = []
            for c in range(level.width):
                code = level[Position(r, c)].code
                cells.append(f"[{code}]" if (r, c) in marked else f" {code} ")
            lines.append("".join(cells))
    return "\n".join(lines) + "\n"
