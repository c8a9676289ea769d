"""Forest-fire percolation on rectangular grids.

Cells are indexed row-major, ``(r, c) -> r * width + c``; row 0 is the north
edge and column 0 the west edge.  The eight Moore neighborhoods are numbered

    V1 NW   V4 N   V6 NE
    V2 W    (x)    V7 E
    V3 SW   V5 S   V8 SE

so ``q4 | q6 | q7`` reads "burn when the cell to the north, north-east or
east burns" and the fire drifts south-west.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import Dnf, NeighborhoodFamily, Structuring, batch_closures, elementary_closures, from_mask
from .errors import ConfigError, EmptyInputError, InvalidArgumentError, ParseError

# (row offset, column offset) of V1..V8
MOORE_OFFSETS = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))
MOORE_NAMES = ("NW", "W", "SW", "N", "S", "NE", "E", "SE")

TARGET_MODELS = {
    "simple": "q4 | q6 | q7",
    "medium": "(q4 & q6) | (q5 & q8) | q7",
    "hard": "q3 | q5 | (q2 & q4) | (q4 & q7) | (q6 & q7 & q8)",
}


def _decimal(value) -> Fraction:
    # 0.3 must mean 3/10, not the nearest binary float
    return value if isinstance(value, Fraction) else Fraction(str(value))


def round_half_up(value) -> int:
    value = _decimal(value)
    return int(value + Fraction(1, 2)) if value >= 0 else -round_half_up(-value)


@dataclass(frozen=True)
class Grid:
    width: int
    height: int
    obstacles: frozenset = frozenset()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidArgumentError("grid dimensions must be positive")
        obstacles = frozenset(self.obstacles)
        object.__setattr__(self, "obstacles", obstacles)
        bad = [x for x in obstacles if not 0 <= x < self.width * self.height]
        if bad:
            raise InvalidArgumentError(f"obstacle cells {sorted(bad)} outside the grid")

    @property
    def n(self) -> int:
        return self.width * self.height

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise InvalidArgumentError(f"cell ({row}, {col}) outside a {self.height}x{self.width} grid")
        return row * self.width + col

    def coords(self, cell: int) -> tuple:
        return divmod(cell, self.width)

    def inflammable(self) -> list:
        return [x for x in range(self.n) if x not in self.obstacles]

    def with_obstacles(self, obstacles) -> "Grid":
        return Grid(self.width, self.height, frozenset(obstacles))


def parse_grid(text: str, source=None) -> Grid:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty grid file: expected 'width height'", 1, 1, source)
    parts = lines[0].split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ParseError(f"expected 'width height', got {lines[0]!r}", 1, 1, source)
    width, height = int(parts[0]), int(parts[1])
    rows = lines[1:]
    if len(rows) != height:
        raise ParseError(f"expected {height} grid rows, got {len(rows)}", len(lines), 1, source)
    obstacles = set()
    for r, row in enumerate(rows):
        row = row.strip()
        if len(row) != width:
            raise ParseError(f"expected {width} cells, got {len(row)}", r + 2, 1, source)
        for c, ch in enumerate(row):
            if ch == "#":
                obstacles.add(r * width + c)
            elif ch != ".":
                raise ParseError(f"unexpected cell character {ch!r}", r + 2, c + 1, source)
    return Grid(width, height, frozenset(obstacles))


def format_grid(grid: Grid) -> str:
    rows = [f"{grid.width} {grid.height}"]
    for r in range(grid.height):
        rows.append("".join("#" if r * grid.width + c in grid.obstacles else "." for c in range(grid.width)))
    return "\n".join(rows) + "\n"


def read_grid(path) -> Grid:
    return parse_grid(Path(path).read_text(), source=str(path))


@lru_cache(maxsize=256)
def moore_family(grid: Grid) -> NeighborhoodFamily:
    """Eight directional neighborhoods; obstructed cells only see themselves."""
    tables = []
    for dr, dc in MOORE_OFFSETS:
        table = []
        for x in range(grid.n):
            r, c = grid.coords(x)
            rr, cc = r + dr, c + dc
            if x in grid.obstacles or not (0 <= rr < grid.height and 0 <= cc < grid.width):
                table.append((x,))
            else:
                table.append((x, rr * grid.width + cc))
        tables.append(table)
    return NeighborhoodFamily(grid.n, tables)


def target_model(name: str) -> Dnf:
    try:
        return Dnf.parse(TARGET_MODELS[name.lower()])
    except KeyError:
        raise InvalidArgumentError(f"unknown target model {name!r}; choose from {sorted(TARGET_MODELS)}") from None


@dataclass(frozen=True)
class ObstacleSeries:
    percentages: tuple
    grids: tuple

    def __iter__(self):
        return iter(zip(self.percentages, self.grids))

    def __len__(self):
        return len(self.grids)


def obstacle_count(percentage, n: int) -> int:
    return round_half_up(_decimal(percentage) * n / 100)


def generate_obstacle_series(width: int, height: int, percentages, rng_seed: int) -> ObstacleSeries:
    """Nested grids: each obstructs a prefix of one shared random cell permutation."""
    pcts = tuple(percentages)
    if not pcts:
        raise ConfigError("at least one obstacle percentage is required")
    if any(not 0 <= p <= 100 for p in pcts):
        raise ConfigError(f"obstacle percentages must lie in [0, 100], got {pcts}")
    if any(a >= b for a, b in zip(pcts, pcts[1:])):
        raise ConfigError(f"obstacle percentages must be strictly increasing, got {pcts}")
    base = Grid(width, height)
    order = np.random.default_rng(rng_seed).permutation(base.n).tolist()
    grids = tuple(base.with_obstacles(order[: obstacle_count(p, base.n)]) for p in pcts)
    return ObstacleSeries(pcts, grids)


def _origin_index(grid: Grid, origin) -> int:
    if isinstance(origin, tuple):
        return grid.index(*origin)
    if not 0 <= origin < grid.n:
        raise InvalidArgumentError(f"origin {origin} outside a grid of {grid.n} cells")
    return origin


def simulate_fire(grid: Grid, model: Dnf, origin) -> frozenset:
    """Burnt cells of a fire lit at ``origin`` (an index or ``(row, col)``)."""
    x = _origin_index(grid, origin)
    if x in grid.obstacles:
        return frozenset({x})
    family = moore_family(grid)
    return from_mask(batch_closures(family, model, [1 << x])[0])


def fire_structuring(grid: Grid, model: Dnf, cells=None) -> Structuring:
    """Elementary closures of ``model`` for ``cells`` (all inflammable cells by default)."""
    cells = grid.inflammable() if cells is None else sorted(cells)
    return elementary_closures(moore_family(grid), model, cells)


def sample_cells(grid: Grid, fraction: float, rng_seed: int) -> list:
    if not 0 < fraction <= 1:
        raise ConfigError(f"training fraction must lie in (0, 1], got {fraction}")
    cells = grid.inflammable()
    if not cells:
        raise EmptyInputError("the grid has no inflammable cell to sample")
    size = max(1, round_half_up(_decimal(fraction) * len(cells)))
    picked = np.random.default_rng(rng_seed).choice(len(cells), size=size, replace=False)
    return sorted(cells[i] for i in picked.tolist())


def build_training_structuring(grid: Grid, model: Dnf, fraction: float, rng_seed: int) -> Structuring:
    """Fires lit in a random sample of inflammable cells, as a partial structuring."""
    return fire_structuring(grid, model, sample_cells(grid, fraction, rng_seed))


def render_ascii(grid: Grid, burnt, origin=None) -> str:
    """``o`` origin, ``*`` burnt, ``.`` inflammable, ``#`` obstructed."""
    burnt = set(burnt)
    o = None if origin is None else _origin_index(grid, origin)
    out = []
    for r in range(grid.height):
        row = []
        for c in range(grid.width):
            x = r * grid.width + c
            if x == o:
                row.append("o")
            elif x in grid.obstacles:
                row.append("#")
            elif x in burnt:
                row.append("*")
            else:
                row.append(".")
        out.append("".join(row))
    return "\n".join(out) + "\n"
