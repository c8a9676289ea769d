"""Line-oriented text formats for neighborhoods and structurings.

Neighborhood file::

    # k n
    4 4
    V1 0: 1
    V1 1: 0
    V2 1: 0 2

Pairs ``(i, x)`` that are never listed default to ``V_i(x) = {x}``.

Structuring file, one elementary closure per line::

    0: 0 1 2 3
    1: 1 2 3

Blank lines and ``#`` comments are ignored in both.
"""

from __future__ import annotations

import re
from pathlib import Path

from .core import NeighborhoodFamily, Structuring, iter_bits
from .errors import InvalidArgumentError, ParseError

_NEIGHBORHOOD_LINE = re.compile(r"^V(\d+)\s+(\d+)\s*:\s*(.*)$")
_STRUCTURING_LINE = re.compile(r"^(\d+)\s*:\s*(.*)$")


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _indices(payload: str, lineno: int, source, column: int) -> list:
    out = []
    for tok in payload.split():
        if not tok.isdigit():
            raise ParseError(f"expected an element index, got {tok!r}", lineno, column, source)
        out.append(int(tok))
    return out


def parse_neighborhoods(text: str, source=None) -> NeighborhoodFamily:
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("empty neighborhood file: expected header 'k n'", 1, 1, source) from None
    parts = header.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ParseError(f"expected header 'k n', got {header!r}", lineno, 1, source)
    k, n = int(parts[0]), int(parts[1])
    if k < 1 or n < 1:
        raise ParseError("k and n must be positive", lineno, 1, source)
    tables = [{} for _ in range(k)]
    for lineno, line in lines:
        m = _NEIGHBORHOOD_LINE.match(line)
        if m is None:
            raise ParseError(f"expected 'V<i> <x>: <y1> ...', got {line!r}", lineno, 1, source)
        i, x = int(m.group(1)), int(m.group(2))
        if not 1 <= i <= k:
            raise ParseError(f"neighborhood V{i} outside 1..{k}", lineno, 1, source)
        if x >= n:
            raise ParseError(f"element {x} outside universe of size {n}", lineno, m.start(2) + 1, source)
        ys = _indices(m.group(3), lineno, source, m.start(3) + 1)
        for y in ys:
            if y >= n:
                raise ParseError(f"element {y} outside universe of size {n}", lineno, m.start(3) + 1, source)
        tables[i - 1].setdefault(x, {x}).update(ys)
    return NeighborhoodFamily(n, tables)


def format_neighborhoods(family: NeighborhoodFamily) -> str:
    lines = [f"{family.k} {family.n}"]
    for i in range(1, family.k + 1):
        for x in range(family.n):
            others = sorted(family.neighborhood(i, x) - {x})
            if others:
                lines.append(f"V{i} {x}: " + " ".join(map(str, others)))
    return "\n".join(lines) + "\n"


def parse_structuring(text: str, n: int, source=None) -> Structuring:
    closures = {}
    for lineno, line in _content_lines(text):
        m = _STRUCTURING_LINE.match(line)
        if m is None:
            raise ParseError(f"expected '<x>: <y1> ...', got {line!r}", lineno, 1, source)
        x = int(m.group(1))
        ys = _indices(m.group(2), lineno, source, m.start(2) + 1)
        for y in [x] + ys:
            if y >= n:
                raise InvalidArgumentError(
                    f"{source or 'structuring'} line {lineno}: element {y} outside universe of size {n}"
                )
        if x in closures:
            raise ParseError(f"element {x} listed twice", lineno, 1, source)
        closures[x] = set(ys) | {x}
    return Structuring(n, closures)


def format_structuring(structuring: Structuring) -> str:
    lines = []
    for x in structuring.elements:
        lines.append(f"{x}: " + " ".join(map(str, iter_bits(structuring.mask(x)))))
    return "\n".join(lines) + ("\n" if lines else "")


def read_neighborhoods(path) -> NeighborhoodFamily:
    return parse_neighborhoods(Path(path).read_text(), source=str(path))


def read_structuring(path, n: int) -> Structuring:
    return parse_structuring(Path(path).read_text(), n, source=str(path))
