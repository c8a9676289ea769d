"""Multiple-instance view of learning a pseudo-closure from elementary closures.

A target structuring ``S*`` engenders

* positive bags ``bag+(x, A)`` for every ``{x} <= A < F*({x})``: the set ``A``
  must propagate to at least one element of ``F*({x}) - A``;
* negative bags ``bag-(x, y)`` for every ``y`` outside ``F*({x})``: no set
  between ``{x}`` and ``F*({x})`` may propagate to ``y``.

Elements sharing an elementary closure form an equivalence class and share
their positive bags.  The counting functions work on those classes without
materialising any bag; :func:`generate_bags_bruteforce` enumerates them
explicitly and is meant as a test oracle on small universes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple

import mpmath

from .core import NeighborhoodFamily, Structuring, WeightVector, _weight_sum, from_mask, iter_bits, to_mask
from .errors import InvalidArgumentError, SizeError

DEFAULT_P = 1.0
DEFAULT_MAX_CLASS_SIZE = 20
DEFAULT_MAX_ORACLE_UNIVERSE = 16


def sublattice_size(bottom, top, exclusive_top: bool = False) -> int:
    """Number of sets between ``bottom`` and ``top`` (``top`` excluded on request)."""
    b, t = to_mask(bottom), to_mask(top)
    if b & ~t:
        raise InvalidArgumentError("bottom must be a subset of top")
    size = 1 << (t.bit_count() - b.bit_count())
    return size - 1 if exclusive_top else size


@dataclass(frozen=True)
class EquivalencePartition:
    """Elements grouped by identical elementary closure, ordered by smallest member."""

    classes: tuple
    closures: tuple

    def __len__(self):
        return len(self.classes)


def _class_masks(target: Structuring) -> list:
    groups = {}
    for x in target.elements:
        top = target.mask(x)
        groups[top] = groups.get(top, 0) | (1 << x)
    # dict keeps insertion order and elements are visited ascending
    return [(members, top) for top, members in groups.items()]


def equivalence_partition(target: Structuring) -> EquivalencePartition:
    pairs = _class_masks(target)
    return EquivalencePartition(
        classes=tuple(from_mask(m) for m, _ in pairs),
        closures=tuple(from_mask(t) for _, t in pairs),
    )


def _class_positive_total(m: int, t: int) -> int:
    # sum_{i=1..m} (-1)^(i+1) C(m,i) (2^(t-i) - 1) == 2^t - 2^(t-m) - 1
    return (1 << t) - (1 << (t - m)) - 1


def _check_closure_size(t: int, cap) -> None:
    if cap is not None and t > cap:
        raise SizeError(f"elementary closure of size {t} exceeds the cap of {cap}")


def total_positive_bags(target: Structuring, max_closure_size: int = None) -> int:
    total = 0
    for members, top in _class_masks(target):
        t = top.bit_count()
        _check_closure_size(t, max_closure_size)
        total += _class_positive_total(members.bit_count(), t)
    return total


def total_negative_bags(target: Structuring) -> int:
    n = target.n
    return sum(n - target.mask(x).bit_count() for x in target.elements)


def _learned_masks(target: Structuring, learned: Structuring) -> dict:
    if learned.n != target.n:
        raise InvalidArgumentError(f"universe sizes differ: target has {target.n}, learned has {learned.n}")
    try:
        return {x: learned.mask(x) for x in target.elements}
    except KeyError as exc:
        raise InvalidArgumentError(f"learned structuring lacks element {exc.args[0]}") from None


def _uncovered_by_subsets(members: list, top: int, true_parts: list) -> int:
    """Sets ``S < top`` meeting the class whose members all keep their true part inside ``S``.

    Enumerates ``X = S & class``; for a valid ``X`` the remaining free elements
    are those of ``top`` outside the class and outside the union of the true
    parts of ``X``.
    """
    m = len(members)
    class_mask = to_mask(members)
    outside = (top & ~class_mask).bit_count()
    unions = [0] * (1 << m)
    chosen = [0] * (1 << m)
    count = 0
    for s in range(1, 1 << m):
        low = s & -s
        j = low.bit_length() - 1
        u = unions[s ^ low] | true_parts[j]
        unions[s] = u
        x_mask = chosen[s ^ low] | (1 << members[j])
        chosen[s] = x_mask
        if u & class_mask & ~x_mask:
            continue
        count += 1 << (outside - (u & ~class_mask).bit_count())
    return count - 1


def _covered_inclusion_exclusion(members: list, top: int, true_parts: list) -> int:
    """Term-by-term evaluation of the class estimate.

    sum over non-empty B of (-1)^(|B|+1) [(2^(t-|B|) - 1) - r(B)], where
    r(B) = |union over x in B of L[G_x | B, top]| - 1 and the union size is
    itself an inclusion-exclusion over the bottoms.
    """
    t = top.bit_count()
    total = 0
    for i in range(1, len(members) + 1):
        for combo in combinations(range(len(members)), i):
            b_mask = to_mask(members[j] for j in combo)
            bottoms = [true_parts[j] | b_mask for j in combo]
            union = 0
            for r in range(1, len(bottoms) + 1):
                for sub in combinations(bottoms, r):
                    joined = 0
                    for bot in sub:
                        joined |= bot
                    union += (-1) ** (r + 1) * (1 << (t - joined.bit_count()))
            rejected = union - 1
            total += (-1) ** (i + 1) * (((1 << (t - i)) - 1) - rejected)
    return total


def covered_positive_estimate(
    target: Structuring,
    learned: Structuring,
    method: str = "subsets",
    max_class_size: int = DEFAULT_MAX_CLASS_SIZE,
) -> int:
    """Estimated number of positive bags covered by the model behind ``learned``.

    Only the true part ``F_Q({x}) & F*({x})`` of each learned closure is
    trusted: every positive bag above it is assumed uncovered.

    ``method="subsets"`` enumerates the subsets of each equivalence class;
    ``method="inclusion-exclusion"`` evaluates the nested inclusion-exclusion
    sums term by term (3^m terms per class of m elements).
    """
    if method not in ("subsets", "inclusion-exclusion"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    learned_masks = _learned_masks(target, learned)
    total = 0
    for members_mask, top in _class_masks(target):
        members = list(iter_bits(members_mask))
        m = len(members)
        if max_class_size is not None and m > max_class_size:
            raise SizeError(f"equivalence class of {m} elements exceeds the cap of {max_class_size}")
        t = top.bit_count()
        true_parts = [learned_masks[x] & top for x in members]
        if method == "inclusion-exclusion":
            total += _covered_inclusion_exclusion(members, top, true_parts)
        elif m == 1:
            # 2^(t-1) - 1 bags, 2^(t-|G|) - 1 of them assumed uncovered
            total += (1 << (t - 1)) - (1 << (t - true_parts[0].bit_count()))
        else:
            total += _class_positive_total(m, t) - _uncovered_by_subsets(members, top, true_parts)
    return total


def covered_negative(target: Structuring, learned: Structuring) -> int:
    learned_masks = _learned_masks(target, learned)
    return sum((learned_masks[x] & ~target.mask(x)).bit_count() for x in target.elements)


class Extrinsic(NamedTuple):
    precision: float
    recall: float
    f_measure: float


def extrinsic_measure(target: Structuring, learned: Structuring) -> Extrinsic:
    """Precision, recall and F-measure of learned closures against target ones."""
    learned_masks = _learned_masks(target, learned)
    hit = got = want = 0
    for x in target.elements:
        f_star, f_q = target.mask(x), learned_masks[x]
        hit += (f_star & f_q).bit_count()
        got += f_q.bit_count()
        want += f_star.bit_count()
    if not want:
        return Extrinsic(0.0, 0.0, 0.0)
    precision = hit / got
    recall = hit / want
    if precision + recall == 0:
        return Extrinsic(precision, recall, 0.0)
    return Extrinsic(precision, recall, 2 * precision * recall / (precision + recall))


def h_score_exact(covered_positive: int, covered_neg: int, p: float = DEFAULT_P) -> Fraction:
    """``h`` at a precision that separates any two distinct bag counts.

    On large closures ``B+_Q`` runs to hundreds of bits and models that differ
    by a few bags share the same float64 logarithm.  The value is evaluated
    with enough bits and returned as a ``Fraction`` so that learners can
    negate and compare it without rounding.
    """
    if p < 0:
        raise InvalidArgumentError("p must be non-negative")
    if covered_positive <= 1:
        return Fraction(0)
    with mpmath.workprec(2 * covered_positive.bit_length() + 64):
        lg = mpmath.log(mpmath.mpf(covered_positive), 2)
        man, exp = (lg / (lg + covered_neg + mpmath.mpf(p))).man_exp
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def h_score(covered_positive: int, covered_neg: int, p: float = DEFAULT_P) -> float:
    """``log2(B+_Q) / (log2(B+_Q) + B-_Q + p)``, floored at 0 when ``B+_Q <= 1``."""
    return float(h_score_exact(covered_positive, covered_neg, p))


def intrinsic_measure(target: Structuring, learned: Structuring, p: float = DEFAULT_P) -> float:
    return h_score(covered_positive_estimate(target, learned), covered_negative(target, learned), p)


@dataclass(frozen=True)
class BagAccounts:
    total_positive: int
    total_negative: int
    covered_positive_estimate: int
    covered_negative: int


def bag_accounts(target: Structuring, learned: Structuring) -> BagAccounts:
    return BagAccounts(
        total_positive=total_positive_bags(target),
        total_negative=total_negative_bags(target),
        covered_positive_estimate=covered_positive_estimate(target, learned),
        covered_negative=covered_negative(target, learned),
    )


class IntrinsicScorer:
    """Intrinsic measure against one fixed target, with its classes precomputed."""

    def __init__(self, target: Structuring, p: float = DEFAULT_P, max_class_size: int = DEFAULT_MAX_CLASS_SIZE):
        if p < 0:
            raise InvalidArgumentError("p must be non-negative")
        self.target = target
        self.p = p
        self._classes = []
        for members_mask, top in _class_masks(target):
            members = list(iter_bits(members_mask))
            if max_class_size is not None and len(members) > max_class_size:
                raise SizeError(f"equivalence class of {len(members)} elements exceeds the cap of {max_class_size}")
            self._classes.append((members, top, top.bit_count()))
        self._complements = {x: ~target.mask(x) for x in target.elements}

    def covered_positive(self, learned: Structuring) -> int:
        total = 0
        for members, top, t in self._classes:
            true_parts = [learned.mask(x) & top for x in members]
            if len(members) == 1:
                total += (1 << (t - 1)) - (1 << (t - true_parts[0].bit_count()))
            else:
                uncovered = _uncovered_by_subsets(members, top, true_parts)
                total += _class_positive_total(len(members), t) - uncovered
        return total

    def covered_negative(self, learned: Structuring) -> int:
        return sum((learned.mask(x) & c).bit_count() for x, c in self._complements.items())

    def exact(self, learned: Structuring) -> Fraction:
        return h_score_exact(self.covered_positive(learned), self.covered_negative(learned), self.p)

    def __call__(self, learned: Structuring) -> float:
        return float(self.exact(learned))


# -- explicit bags (oracle) ---------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """The propagation of ``source`` to ``target`` and its predicate values."""

    source: frozenset
    target: int
    features: tuple


@dataclass(frozen=True)
class Bag:
    label: str  # "+" or "-"
    origin: frozenset
    key: tuple
    instances: tuple

    @property
    def positive(self) -> bool:
        return self.label == "+"

    def covered_by(self, model) -> bool:
        """Standard assumption: covered iff at least one instance satisfies ``model``."""
        return any(_instance_satisfies(model, inst.features) for inst in self.instances)


def _instance_satisfies(model, features) -> bool:
    if isinstance(model, WeightVector):
        hit = [i for i in range(model.k) if features[i]]
        return _weight_sum(model.weights, hit) >= model.threshold
    return any(all(features[i - 1] for i in clause) for clause in model.clauses)


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _set_order(mask: int):
    return (mask.bit_count(), tuple(iter_bits(mask)))


def generate_bags_bruteforce(
    family: NeighborhoodFamily, target: Structuring, max_universe: int = DEFAULT_MAX_ORACLE_UNIVERSE
) -> list:
    """Materialise every positive and negative bag engendered by ``target``."""
    if target.n != family.n:
        raise InvalidArgumentError(f"universe sizes differ: family has {family.n}, target has {target.n}")
    if max_universe is not None and family.n > max_universe:
        raise SizeError(f"bag enumeration over {family.n} elements exceeds the cap of {max_universe}")
    masks = family._masks

    def instance(a: int, y: int) -> Instance:
        return Instance(from_mask(a), y, tuple(bool(masks[i][y] & a) for i in range(family.k)))

    bags = []
    for members, top in _class_masks(target):
        sources = [s for s in _submasks(top) if s != top and s & members]
        for a in sorted(sources, key=_set_order):
            insts = tuple(instance(a, y) for y in iter_bits(top & ~a))
            bags.append(Bag("+", from_mask(a & members), (from_mask(a), from_mask(top)), insts))
    for x in target.elements:
        top = target.mask(x)
        rest = top & ~(1 << x)
        sources = sorted(((1 << x) | s for s in _submasks(rest)), key=_set_order)
        for y in range(family.n):
            if top >> y & 1:
                continue
            insts = tuple(instance(a, y) for a in sources)
            bags.append(Bag("-", frozenset({x}), (x, y), insts))
    return bags


class OracleCounts(NamedTuple):
    positive: int
    negative: int
    covered_positive: int
    covered_negative: int


def oracle_counts(bags: list, model) -> OracleCounts:
    pos = [b for b in bags if b.positive]
    neg = [b for b in bags if not b.positive]
    return OracleCounts(
        positive=len(pos),
        negative=len(neg),
        covered_positive=sum(b.covered_by(model) for b in pos),
        covered_negative=sum(b.covered_by(model) for b in neg),
    )


def _fmt_set(s) -> str:
    return ",".join(map(str, sorted(s))) or "-"


def format_bags(bags: list) -> str:
    """``+ x A : y1 y2 ...`` for positive bags, ``- x y : A1 ; A2 ; ...`` for negative ones.

    Sets are written as comma-separated indices.
    """
    lines = []
    for bag in bags:
        if bag.positive:
            x = min(bag.origin)
            source = bag.instances[0].source
            ys = " ".join(str(inst.target) for inst in bag.instances)
            lines.append(f"+ {x} {_fmt_set(source)} : {ys}")
        else:
            x, y = bag.key
            sources = " ; ".join(_fmt_set(inst.source) for inst in bag.instances)
            lines.append(f"- {x} {y} : {sources}")
    return "\n".join(lines) + ("\n" if lines else "")
