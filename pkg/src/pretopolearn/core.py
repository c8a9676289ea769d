"""Pretopological spaces built from a family of neighborhoods.

Sets of elements are handled internally as ``int`` bitmasks (bit ``x`` is set
iff element ``x`` belongs to the set).  Public functions accept any iterable of
element indices and return ``frozenset`` objects.

Predicates are numbered from 1, as in ``q1 .. qk``; neighborhoods are stored
0-based.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError, InvalidModelError, ParseError, SizeError

ElementSet = frozenset
Clause = frozenset

DEFAULT_MAX_WEIGHT_PREDICATES = 20
# universes at least this large use the vectorised closure routine
NUMPY_MIN_ELEMENTS = 64


def to_mask(elements: Union[int, Iterable[int]]) -> int:
    if isinstance(elements, int):
        return elements
    mask = 0
    for x in elements:
        if x < 0:
            raise InvalidArgumentError(f"negative element index {x}")
        mask |= 1 << x
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def from_mask(mask: int) -> frozenset:
    return frozenset(iter_bits(mask))


@dataclass(frozen=True)
class Universe:
    """A finite, indexed set of elements.  Labels are for display only."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise InvalidArgumentError("a universe needs at least one element")
        if len(set(labels)) != len(labels):
            raise InvalidArgumentError("universe labels must be unique")

    @classmethod
    def of_size(cls, n: int) -> "Universe":
        return cls(tuple(str(i) for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidArgumentError(f"unknown element label {label!r}") from None

    def format_set(self, elements: Iterable[int]) -> str:
        return "{" + ", ".join(self.labels[x] for x in sorted(elements)) + "}"


class NeighborhoodFamily:
    """``k`` neighborhood functions ``V_i : E -> P(E)`` over one universe.

    ``neighborhoods[i]`` describes ``V_{i+1}`` either as a mapping
    ``x -> iterable`` (missing elements get ``{x}``) or as a sequence of ``n``
    iterables.  With ``reflexive=True`` every ``x`` is added to its own
    neighborhoods, which is the usual convention for pretopological spaces.
    """

    def __init__(self, universe, neighborhoods: Sequence, reflexive: bool = True):
        if isinstance(universe, int):
            universe = Universe.of_size(universe)
        self.universe = universe
        n = universe.size
        if len(neighborhoods) == 0:
            raise InvalidArgumentError("a neighborhood family needs k >= 1")
        nbrs = []
        for i, spec in enumerate(neighborhoods):
            if isinstance(spec, Mapping):
                rows = [spec.get(x, (x,)) for x in range(n)]
                for x in spec:
                    if not 0 <= x < n:
                        raise InvalidArgumentError(f"V{i + 1}: element {x} outside universe of size {n}")
            else:
                rows = list(spec)
                if len(rows) != n:
                    raise InvalidArgumentError(f"V{i + 1}: expected {n} neighborhoods, got {len(rows)}")
            table = []
            for x, row in enumerate(rows):
                members = set(row)
                if reflexive:
                    members.add(x)
                for y in members:
                    if not 0 <= y < n:
                        raise InvalidArgumentError(f"V{i + 1}({x}) contains {y}, outside universe of size {n}")
                table.append(tuple(sorted(members)))
            nbrs.append(tuple(table))
        self._nbrs = tuple(nbrs)
        self._masks = tuple(tuple(to_mask(row) for row in table) for table in self._nbrs)
        rev = []
        for table in self._nbrs:
            r = [[] for _ in range(n)]
            for x, row in enumerate(table):
                for y in row:
                    r[y].append(x)
            rev.append(tuple(tuple(v) for v in r))
        self._rev = tuple(rev)
        self._dependents_cache = {}
        self._gather_cache = {}

    @property
    def k(self) -> int:
        return len(self._nbrs)

    @property
    def n(self) -> int:
        return self.universe.size

    def neighborhood(self, i: int, x: int) -> frozenset:
        self._check_predicate(i)
        self._check_element(x)
        return frozenset(self._nbrs[i - 1][x])

    def is_reflexive(self) -> bool:
        return all(x in row for table in self._nbrs for x, row in enumerate(table))

    def _check_predicate(self, i: int) -> None:
        if not 1 <= i <= self.k:
            raise InvalidArgumentError(f"predicate index q{i} outside 1..{self.k}")

    def _check_element(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise InvalidArgumentError(f"element {x} outside universe of size {self.n}")

    def _dependents(self, predicates: frozenset) -> tuple:
        # dependents[y]: elements x whose truth value may change when y is added
        deps = self._dependents_cache.get(predicates)
        if deps is None:
            acc = [set() for _ in range(self.n)]
            for i in predicates:
                for y, xs in enumerate(self._rev[i]):
                    acc[y].update(xs)
            deps = tuple(tuple(sorted(s)) for s in acc)
            self._dependents_cache[predicates] = deps
        return deps

    def _gather(self, i: int) -> list:
        # index columns for V_{i+1}, padded with n (an all-zero sentinel row)
        cols = self._gather_cache.get(i)
        if cols is None:
            table = self._nbrs[i]
            width = max(1, max(len(row) for row in table))
            padded = np.full((self.n, width), self.n, dtype=np.intp)
            for x, row in enumerate(table):
                padded[x, : len(row)] = row
            cols = self._gather_cache[i] = [padded[:, j].copy() for j in range(width)]
        return cols

    def __eq__(self, other):
        if not isinstance(other, NeighborhoodFamily):
            return NotImplemented
        return self.universe == other.universe and self._nbrs == other._nbrs

    def __hash__(self):
        return hash((self.universe, self._nbrs))

    def __repr__(self):
        return f"NeighborhoodFamily(n={self.n}, k={self.k})"


def _canonical_clause(clause) -> frozenset:
    c = frozenset(clause)
    if not c:
        raise InvalidModelError("a clause needs at least one predicate")
    for i in c:
        if not isinstance(i, int) or isinstance(i, bool) or i < 1:
            raise InvalidModelError(f"invalid predicate index {i!r}")
    return c


def _sort_key(clause: frozenset):
    return tuple(sorted(clause))


class Dnf:
    """A positive DNF over predicates ``q1 .. qk``, kept well-formed.

    Duplicate clauses and clauses subsumed by a more general clause are
    dropped at construction, so two logically equivalent positive DNFs compare
    equal.  The empty DNF never propagates.
    """

    __slots__ = ("clauses",)

    def __init__(self, clauses: Iterable[Iterable[int]] = ()):
        unique = {_canonical_clause(c) for c in clauses}
        kept = [c for c in unique if not any(o < c for o in unique)]
        self.clauses = tuple(sorted(kept, key=_sort_key))

    @classmethod
    def parse(cls, text: str) -> "Dnf":
        return parse_dnf(text)

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self):
        return len(self.clauses)

    def __bool__(self):
        return bool(self.clauses)

    def __eq__(self, other):
        if not isinstance(other, Dnf):
            return NotImplemented
        return self.clauses == other.clauses

    def __hash__(self):
        return hash(self.clauses)

    def __str__(self):
        return format_dnf(self)

    def __repr__(self):
        return f"Dnf({format_dnf(self)!r})"

    @property
    def max_index(self) -> int:
        return max((max(c) for c in self.clauses), default=0)

    def predicates(self) -> frozenset:
        return frozenset().union(*self.clauses)

    def with_clause(self, clause: Iterable[int]) -> "Dnf":
        return Dnf(self.clauses + (frozenset(clause),))

    def subsumes(self, clause: Iterable[int]) -> bool:
        """True when some clause of this DNF is at least as general as ``clause``."""
        c = frozenset(clause)
        return any(o <= c for o in self.clauses)


def simplify_dnf(clauses: Iterable[Iterable[int]]) -> Dnf:
    return Dnf(clauses)


def format_dnf(dnf: Dnf) -> str:
    if not dnf.clauses:
        return "false"
    parts = []
    for c in dnf.clauses:
        lits = " & ".join(f"q{i}" for i in sorted(c))
        parts.append(lits if len(c) == 1 else f"({lits})")
    return " | ".join(parts)


_TOKEN = re.compile(r"\s*(?:(?P<lit>q\d+)|(?P<sym>[()&|])|(?P<word>false)|(?P<bad>\S+?(?=[\s()&|]|$)))")


def parse_dnf(text: str, line: int = None, source: str = None) -> Dnf:
    """Parse ``(q1 & q2) | q3``; ``false`` or a blank string is the empty DNF."""
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    if pos < len(text) and text[pos:].strip():
        raise ParseError(f"unexpected text {text[pos:].strip()!r}", line, pos + 1, source)

    if not tokens:
        return Dnf()
    if len(tokens) == 1 and tokens[0][0] == "word":
        return Dnf()

    end_col = len(text.rstrip()) + 1
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else ("eof", "end of input", end_col)

    def fail(tok, expected):
        kind, value, col = tok
        shown = value if kind == "eof" else repr(value)
        raise ParseError(f"unexpected {shown}, expected {expected}", line, col, source)

    def literal():
        nonlocal idx
        tok = peek()
        if tok[0] != "lit":
            fail(tok, "a literal 'q<i>'")
        number = int(tok[1][1:])
        if number < 1:
            raise ParseError(f"invalid literal {tok[1]!r}: predicates are numbered from 1", line, tok[2], source)
        idx += 1
        return number

    clauses = []
    while True:
        tok = peek()
        if tok[1] == "(":
            idx += 1
            lits = [literal()]
            while peek()[1] == "&":
                idx += 1
                lits.append(literal())
            if peek()[1] != ")":
                fail(peek(), "'&' or ')'")
            idx += 1
            clauses.append(lits)
        else:
            clauses.append([literal()])
        tok = peek()
        if tok[0] == "eof":
            break
        if tok[1] != "|":
            fail(tok, "'|' or end of input")
        idx += 1
    return Dnf(clauses)


def _weight_sum(weights: Sequence[float], indices: Iterable[int]) -> float:
    # Left-to-right summation in index order; shared by every weighted path so
    # the threshold test is evaluated identically everywhere.
    total = 0.0
    for i in indices:
        total += weights[i]
    return total


@dataclass(frozen=True)
class WeightVector:
    """Threshold ``w0`` and weights ``w1 .. wk`` of a weighted pseudo-closure."""

    threshold: float
    weights: tuple

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "threshold", float(self.threshold))
        if not weights:
            raise InvalidModelError("a weight vector needs at least one neighborhood weight")
        if not self.threshold > 0:
            raise InvalidModelError(f"threshold w0 must be > 0, got {self.threshold}")
        if any(not w >= 0 for w in weights):
            raise InvalidModelError("weights must be non-negative")
        if _weight_sum(weights, range(len(weights))) < self.threshold:
            raise InvalidModelError("weights sum below the threshold w0: nothing could ever propagate")

    @classmethod
    def of(cls, *values: float) -> "WeightVector":
        """``WeightVector.of(w0, w1, ..., wk)``."""
        return cls(values[0], tuple(values[1:]))

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        try:
            values = [float(v) for v in text.split()]
        except ValueError as exc:
            raise ParseError(f"bad weight vector {text!r}: {exc}") from None
        if len(values) < 2:
            raise ParseError(f"weight vector needs 'w0 w1 ... wk', got {text!r}")
        return cls.of(*values)

    @property
    def k(self) -> int:
        return len(self.weights)

    def __str__(self):
        return " ".join(repr(v) for v in (self.threshold,) + self.weights)


Model = Union[Dnf, WeightVector]


def _check_model(family: NeighborhoodFamily, model) -> None:
    if isinstance(model, Dnf):
        if model.max_index > family.k:
            raise InvalidArgumentError(f"DNF uses q{model.max_index} but the family has k={family.k}")
    elif isinstance(model, WeightVector):
        if model.k > family.k:
            raise InvalidArgumentError(f"weight vector has {model.k} weights but the family has k={family.k}")
    else:
        raise InvalidModelError(f"unsupported model type {type(model).__name__}")


def _check_set(family: NeighborhoodFamily, A) -> int:
    mask = to_mask(A)
    if mask >> family.n:
        raise InvalidArgumentError(f"set {sorted(iter_bits(mask))} exceeds universe of size {family.n}")
    return mask


def predicate_eval(family: NeighborhoodFamily, i: int, A, x: int) -> bool:
    """``q_i(A, x)``: does ``V_i(x)`` meet ``A``?"""
    family._check_predicate(i)
    family._check_element(x)
    return bool(family._masks[i - 1][x] & _check_set(family, A))


def _dnf_step(family, clauses, mask: int) -> int:
    masks = family._masks
    out = mask
    for x in range(family.n):
        if mask >> x & 1:
            continue
        for c in clauses:
            if all(masks[i - 1][x] & mask for i in c):
                out |= 1 << x
                break
    return out


def _weighted_step(family, w: WeightVector, mask: int) -> int:
    masks = family._masks
    out = mask
    for x in range(family.n):
        if mask >> x & 1:
            continue
        hit = [i for i in range(w.k) if masks[i][x] & mask]
        if _weight_sum(w.weights, hit) >= w.threshold:
            out |= 1 << x
    return out


def pseudo_closure_dnf(family: NeighborhoodFamily, dnf: Dnf, A) -> frozenset:
    _check_model(family, dnf)
    return from_mask(_dnf_step(family, dnf.clauses, _check_set(family, A)))


def pseudo_closure_weighted(family: NeighborhoodFamily, w: WeightVector, A) -> frozenset:
    if not isinstance(w, WeightVector):
        raise InvalidModelError("expected a WeightVector")
    _check_model(family, w)
    return from_mask(_weighted_step(family, w, _check_set(family, A)))


def pseudo_closure(family: NeighborhoodFamily, model: Model, A) -> frozenset:
    if isinstance(model, WeightVector):
        return pseudo_closure_weighted(family, model, A)
    return pseudo_closure_dnf(family, model, A)


def closure(family: NeighborhoodFamily, model: Model, A) -> frozenset:
    """Iterate the pseudo-closure from ``A`` until it reaches a fixpoint."""
    _check_model(family, model)
    mask = _check_set(family, A)
    if isinstance(model, WeightVector):
        step = lambda m: _weighted_step(family, model, m)  # noqa: E731
    else:
        step = lambda m: _dnf_step(family, model.clauses, m)  # noqa: E731
    while True:
        nxt = step(mask)
        if nxt == mask:
            return from_mask(mask)
        mask = nxt


def batch_closures(family: NeighborhoodFamily, dnf: Dnf, seeds: Sequence[int], method: str = "auto") -> list:
    """Closures of many seed sets (bitmasks) at once.

    ``method`` is ``"worklist"``, ``"numpy"`` or ``"auto"`` (numpy on large
    universes).  Both compute the same least fixpoints.
    """
    if method == "auto":
        method = "numpy" if family.n >= NUMPY_MIN_ELEMENTS else "worklist"
    if method == "numpy":
        return _batch_closures_numpy(family, dnf, seeds)
    if method != "worklist":
        raise InvalidArgumentError(f"unknown closure method {method!r}")
    return _batch_closures_worklist(family, dnf, seeds)


def _batch_closures_worklist(family: NeighborhoodFamily, dnf: Dnf, seeds: Sequence[int]) -> list:
    """Works column-wise: ``col[x]`` holds one bit per seed, set when ``x`` belongs
    to that seed's closure, and a worklist re-examines only the elements whose
    predicates may have changed.  The operator is isotone, so the chaotic
    iteration reaches the same least fixpoint as repeated pseudo-closures.
    """
    n = family.n
    m = len(seeds)
    col = [0] * n
    for b, seed in enumerate(seeds):
        bit = 1 << b
        for x in iter_bits(seed):
            col[x] |= bit
    clauses = [tuple(i - 1 for i in sorted(c)) for c in dnf.clauses]
    if clauses and m:
        used = sorted({i for c in clauses for i in c})
        nbrs = family._nbrs
        deps = family._dependents(frozenset(used))
        full = (1 << m) - 1
        pending = bytearray(b"\x01") * n
        queue = deque(range(n))
        while queue:
            x = queue.popleft()
            pending[x] = 0
            cur = col[x]
            open_slots = full & ~cur
            if not open_slots:
                continue
            pred = {}
            for i in used:
                p = 0
                for y in nbrs[i][x]:
                    p |= col[y]
                pred[i] = p
            add = 0
            for c in clauses:
                acc = open_slots
                for i in c:
                    acc &= pred[i]
                    if not acc:
                        break
                add |= acc
            if add:
                col[x] = cur | add
                for z in deps[x]:
                    if not pending[z]:
                        pending[z] = 1
                        queue.append(z)
    rows = [0] * m
    for x, c in enumerate(col):
        bit = 1 << x
        while c:
            low = c & -c
            rows[low.bit_length() - 1] |= bit
            c ^= low
    return rows


def _batch_closures_numpy(family: NeighborhoodFamily, dnf: Dnf, seeds: Sequence[int]) -> list:
    """Synchronous pseudo-closure steps over all seeds, one bit per seed.

    ``col`` has one row per element (plus a zero sentinel row) and packs the
    seeds into 64-bit words.
    """
    n, m = family.n, len(seeds)
    if not m:
        return []
    nbytes = (n + 8) // 8
    seed_bits = np.zeros((m, n + 1), dtype=np.uint8)
    for b, seed in enumerate(seeds):
        raw = np.frombuffer(seed.to_bytes(nbytes, "little"), dtype=np.uint8)
        seed_bits[b] = np.unpackbits(raw, bitorder="little")[: n + 1]
    words = (m + 63) // 64
    packed = np.zeros((n + 1, words * 8), dtype=np.uint8)
    packed[:, : (m + 7) // 8] = np.packbits(seed_bits.T, axis=1, bitorder="little")
    col = packed.view(np.uint64)
    clauses = [tuple(i - 1 for i in sorted(c)) for c in dnf.clauses]
    used = sorted({i for c in clauses for i in c})
    gathers = {i: family._gather(i) for i in used}
    while clauses:
        preds = {}
        for i in used:
            g = gathers[i]
            p = col[g[0]]
            for idx in g[1:]:
                p |= col[idx]
            preds[i] = p
        grown = col.copy()
        body = grown[:n]
        for c in clauses:
            if len(c) == 1:
                body |= preds[c[0]]
            else:
                acc = preds[c[0]] & preds[c[1]]
                for i in c[2:]:
                    acc &= preds[i]
                body |= acc
        if np.array_equal(grown, col):
            break
        col = grown
    bits = np.unpackbits(col[:n].view(np.uint8), axis=1, bitorder="little")[:, :m]
    rows = np.packbits(bits.T, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in rows]


def elementary_closures(family: NeighborhoodFamily, model: Model, elements: Iterable[int] = None) -> "Structuring":
    """The structuring ``x -> F({x})``, optionally restricted to ``elements``."""
    _check_model(family, model)
    if isinstance(model, WeightVector):
        model = weights_to_dnf(model, family.k)
    xs = range(family.n) if elements is None else sorted(set(elements))
    for x in xs:
        family._check_element(x)
    rows = batch_closures(family, model, [1 << x for x in xs])
    return Structuring._trusted(family.n, dict(zip(xs, rows)))


def weights_to_dnf(w: WeightVector, k: int = None, max_k: int = DEFAULT_MAX_WEIGHT_PREDICATES) -> Dnf:
    """Positive DNF with one clause per weight combination reaching ``w0``."""
    k = w.k if k is None else k
    if max_k is not None and k > max_k:
        raise SizeError(f"converting {k} weights needs 2^{k} subsets; cap is {max_k}")
    weights = list(w.weights[:k]) + [0.0] * max(0, k - w.k)
    size = 1 << k
    # sums[s] adds weights in increasing index order, like _weight_sum
    sums = [0.0] * size
    for s in range(1, size):
        top = s.bit_length() - 1
        sums[s] = sums[s ^ (1 << top)] + weights[top]
    reach = [v >= w.threshold for v in sums]
    clauses = []
    for s in range(1, size):
        if reach[s] and not any(reach[s ^ (1 << b)] for b in iter_bits(s)):
            clauses.append([b + 1 for b in iter_bits(s)])
    return Dnf(clauses)


class Structuring:
    """Elementary closures ``x -> F({x})`` for some or all elements of a universe.

    A partial structuring (a sample of elements) is allowed; measures sum over
    the elements it holds.
    """

    __slots__ = ("n", "_masks")

    def __init__(self, n: int, closures: Mapping[int, Iterable[int]]):
        masks = {}
        for x, members in closures.items():
            if not 0 <= x < n:
                raise InvalidArgumentError(f"element {x} outside universe of size {n}")
            mask = to_mask(members)
            if mask >> n:
                raise InvalidArgumentError(f"closure of {x} exceeds universe of size {n}")
            if not mask >> x & 1:
                raise InvalidArgumentError(f"closure of {x} must contain {x}")
            masks[x] = mask
        self.n = n
        self._masks = dict(sorted(masks.items()))

    @classmethod
    def _trusted(cls, n: int, masks: dict) -> "Structuring":
        obj = cls.__new__(cls)
        obj.n = n
        obj._masks = dict(sorted(masks.items()))
        return obj

    @classmethod
    def identity(cls, n: int, elements: Iterable[int] = None) -> "Structuring":
        xs = range(n) if elements is None else elements
        return cls._trusted(n, {x: 1 << x for x in xs})

    @property
    def elements(self) -> tuple:
        return tuple(self._masks)

    def is_complete(self) -> bool:
        return len(self._masks) == self.n

    def mask(self, x: int) -> int:
        return self._masks[x]

    def masks(self) -> dict:
        return dict(self._masks)

    def __getitem__(self, x: int) -> frozenset:
        return from_mask(self._masks[x])

    def __contains__(self, x) -> bool:
        return x in self._masks

    def __iter__(self):
        return iter(self._masks)

    def __len__(self):
        return len(self._masks)

    def items(self):
        return ((x, from_mask(m)) for x, m in self._masks.items())

    def restrict(self, elements: Iterable[int]) -> "Structuring":
        return Structuring._trusted(self.n, {x: self._masks[x] for x in elements})

    def __eq__(self, other):
        if not isinstance(other, Structuring):
            return NotImplemented
        return self.n == other.n and self._masks == other._masks

    def __hash__(self):
        return hash((self.n, tuple(self._masks.items())))

    def __repr__(self):
        body = ", ".join(f"{x}: {sorted(iter_bits(m))}" for x, m in self._masks.items())
        return f"Structuring(n={self.n}, {{{body}}})"
