import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import A, B, C, D, S1, running_family, running_plain
from pretopolearn.bags import (
    IntrinsicScorer,
    bag_accounts,
    covered_negative,
    covered_positive_estimate,
    equivalence_partition,
    extrinsic_measure,
    format_bags,
    generate_bags_bruteforce,
    h_score,
    h_score_exact,
    intrinsic_measure,
    oracle_counts,
    sublattice_size,
    total_negative_bags,
    total_positive_bags,
)
from pretopolearn.core import Dnf, NeighborhoodFamily, Structuring, elementary_closures
from pretopolearn.errors import InvalidArgumentError, SizeError

E = {A, B, C, D}
SMALL_TARGET = {A: E, B: {B, C, D}, C: {C}, D: {D}}
SMALL_LEARNED = {A: {A, C, D}, B: E, C: {C, D}, D: {C, D}}


def test_sublattice_sizes():
    assert sublattice_size({B}, {B, C, D}, exclusive_top=True) == 3
    assert sublattice_size({B, C}, {B, C}) == 1
    assert sublattice_size({A}, E, exclusive_top=True) == 7
    with pytest.raises(InvalidArgumentError):
        sublattice_size({A}, {B})


def test_equivalence_partition():
    assert equivalence_partition(Structuring(4, S1)).classes == tuple(frozenset({x}) for x in range(4))
    part = equivalence_partition(Structuring(4, {A: E, B: {B}, C: E, D: {D}}))
    assert part.classes == (frozenset({A, C}), frozenset({B}), frozenset({D}))
    assert part.closures[0] == E
    assert len(equivalence_partition(Structuring.identity(5))) == 5


def test_totals_on_table_one():
    s1 = Structuring(4, S1)
    assert total_positive_bags(s1) == 7 + 3 + 1 + 0
    assert total_negative_bags(s1) == 0 + 1 + 2 + 3
    assert total_positive_bags(Structuring(4, {A: E, C: E})) == 2 * 7 - 3
    assert total_positive_bags(Structuring.identity(3)) == 0
    assert total_negative_bags(Structuring(3, {x: {0, 1, 2} for x in range(3)})) == 0


def test_total_positive_cap():
    big = Structuring(70, {0: range(70)})
    assert total_positive_bags(big) == 2**69 - 1
    with pytest.raises(SizeError):
        total_positive_bags(big, max_closure_size=62)


def _features(bag):
    return [tuple(int(v) for v in inst.features) for inst in bag.instances]


def test_bags_engendered_by_b_match_the_table():
    bags = generate_bags_bruteforce(running_family(), Structuring(4, S1))
    of_b = [bg for bg in bags if bg.origin == {B}]
    pos = [bg for bg in of_b if bg.positive]
    neg = [bg for bg in of_b if not bg.positive]
    assert [bg.key[0] for bg in pos] == [{B}, {B, C}, {B, D}]
    assert [[inst.target for inst in bg.instances] for bg in pos] == [[C, D], [D], [C]]
    assert _features(pos[0]) == [(0, 0, 1, 1), (1, 0, 0, 0)]
    assert _features(pos[1]) == [(1, 1, 1, 0)]
    assert _features(pos[2]) == [(0, 0, 1, 1)]
    assert len(neg) == 1 and neg[0].key == (B, A)
    assert [set(inst.source) for inst in neg[0].instances] == [{B}, {B, C}, {B, D}, {B, C, D}]
    assert _features(neg[0]) == [(1, 0, 0, 1)] * 4


def test_bag_dump_format():
    bags = generate_bags_bruteforce(running_family(), Structuring(4, S1))
    lines = format_bags(bags).splitlines()
    assert "+ 1 1 : 2 3" in lines
    assert "- 1 0 : 1 ; 1,2 ; 1,3 ; 1,2,3" in lines
    assert len(lines) == 11 + 6


def test_bag_enumeration_cap():
    fam = NeighborhoodFamily(17, [{}])
    with pytest.raises(SizeError):
        generate_bags_bruteforce(fam, Structuring.identity(17))


def test_worked_positive_estimates():
    target = Structuring(4, {A: E, C: E})
    learned = Structuring(4, {A: {A, B}, C: {C, D}})
    for method in ("subsets", "inclusion-exclusion"):
        assert covered_positive_estimate(target, learned, method) == 7
    single = Structuring(4, {A: E})
    for method in ("subsets", "inclusion-exclusion"):
        assert covered_positive_estimate(single, Structuring(4, {A: {A, B}}), method) == 7 - 3


def test_perfect_model_saturates():
    s1 = Structuring(4, S1)
    acc = bag_accounts(s1, s1)
    assert acc.covered_positive_estimate == acc.total_positive == 11
    assert acc.covered_negative == 0


def test_covered_negative_examples():
    assert covered_negative(Structuring(4, SMALL_TARGET), Structuring(4, SMALL_LEARNED)) == 3
    everything = Structuring(4, {x: E for x in range(4)})
    assert covered_negative(Structuring.identity(4), everything) == 12


def test_universe_mismatch_rejected():
    with pytest.raises(InvalidArgumentError):
        covered_negative(Structuring.identity(4), Structuring.identity(5))
    with pytest.raises(InvalidArgumentError):
        covered_positive_estimate(Structuring.identity(4), Structuring.identity(4, [0, 1]))


def test_extrinsic_on_small_table():
    p, r, f = extrinsic_measure(Structuring(4, SMALL_TARGET), Structuring(4, SMALL_LEARNED))
    assert Fraction(p).limit_denominator(100) == Fraction(8, 11)
    assert Fraction(r).limit_denominator(100) == Fraction(8, 9)
    assert f == pytest.approx(0.8, abs=1e-12)
    assert extrinsic_measure(Structuring(4, S1), Structuring(4, S1)) == (1.0, 1.0, 1.0)
    assert extrinsic_measure(Structuring.identity(3), Structuring.identity(3)) == (1.0, 1.0, 1.0)


def test_intrinsic_formula():
    assert h_score(7, 0, 1) == pytest.approx(math.log2(7) / (math.log2(7) + 1))
    assert h_score(7, 0, 1) == pytest.approx(0.7373, abs=1e-4)
    assert h_score(1, 0) == 0.0
    assert h_score(0, 5) == 0.0
    scores = [h_score(1000, neg, 1) for neg in range(6)]
    assert all(a > b for a, b in zip(scores, scores[1:]))
    with pytest.raises(InvalidArgumentError):
        h_score(10, 0, -1)


def test_exact_intrinsic_separates_huge_counts():
    big = 2**200 - 2**60
    assert h_score(big, 0) == h_score(big + 1, 0)  # float64 cannot tell them apart
    assert h_score_exact(big + 1, 0) > h_score_exact(big, 0)
    assert -h_score_exact(big + 1, 0) < -h_score_exact(big, 0)


def test_intrinsic_scorer_matches_function():
    s1 = Structuring(4, S1)
    fam = running_family()
    for text in ("q1", "q3", "(q1 & q2) | q3", "q4", "false"):
        learned = elementary_closures(fam, Dnf.parse(text))
        assert IntrinsicScorer(s1)(learned) == intrinsic_measure(s1, learned)


def test_negative_estimate_misses_joint_propagation():
    # F*(a) = {a, b}; the candidate needs both a and b to reach c, so no single
    # elementary closure escapes its lattice, yet bag-(a, c) is covered.
    fam = NeighborhoodFamily(3, [{2: {0}}, {2: {1}}, {1: {0}}])
    target = elementary_closures(fam, Dnf.parse("q3"))
    assert target[0] == {0, 1}
    learned = elementary_closures(fam, Dnf.parse("(q1 & q2)"))
    assert all(learned[x] <= target[x] for x in range(3))
    counts = oracle_counts(generate_bags_bruteforce(fam, target), Dnf.parse("(q1 & q2)"))
    assert covered_negative(target, learned) == 0
    assert counts.covered_negative == 1


# -- randomized oracle checks ---------------------------------------------------------


@st.composite
def bag_instances(draw):
    n = draw(st.integers(1, 7))
    k = draw(st.integers(1, 5))
    rng = random.Random(draw(st.integers(0, 2**32 - 1)))
    family = oracles.random_family(rng, n, k, rng.choice([0.15, 0.3, 0.5]))
    return n, k, family, oracles.random_dnf(rng, k), oracles.random_dnf(rng, k)


@settings(max_examples=80, deadline=None)
@given(bag_instances())
def test_bag_counts_match_definitions(inst):
    n, k, family, target_dnf, learned_dnf = inst
    fam = oracles.as_core_family(family, n)
    target = elementary_closures(fam, Dnf(target_dnf))
    learned = elementary_closures(fam, Dnf(learned_dnf))
    plain_target = {x: set(v) for x, v in target.items()}
    plain_learned = {x: set(v) for x, v in learned.items()}
    ref = oracles.bag_counts(family, learned_dnf, plain_target, n)
    bags = generate_bags_bruteforce(fam, target)
    got = oracle_counts(bags, Dnf(learned_dnf))
    assert (got.positive, got.negative) == (ref["positive"], ref["negative"])
    assert (got.covered_positive, got.covered_negative) == (ref["covered_positive"], ref["covered_negative"])
    assert total_positive_bags(target) == ref["positive"]
    assert total_negative_bags(target) == ref["negative"]
    estimate = covered_positive_estimate(target, learned)
    assert estimate == covered_positive_estimate(target, learned, "inclusion-exclusion")
    assert estimate == oracles.covered_positive_literal(plain_target, plain_learned)
    acc = bag_accounts(target, learned)
    assert 0 <= acc.covered_positive_estimate <= acc.total_positive
    assert 0 <= acc.covered_negative <= acc.total_negative


@settings(max_examples=60, deadline=None)
@given(bag_instances())
def test_positive_bags_shared_within_classes_only(inst):
    n, k, family, target_dnf, _ = inst
    fam = oracles.as_core_family(family, n)
    target = elementary_closures(fam, Dnf(target_dnf))
    positive = [b for b in generate_bags_bruteforce(fam, target) if b.positive]
    keys = [b.key for b in positive]
    assert len(keys) == len(set(keys))
    for bag in positive:
        source, top = bag.key
        # the bag belongs to the class of closure ``top`` and to no other
        members = {x for x in range(n) if target[x] == top}
        assert bag.origin == source & members and bag.origin
        for inst_ in bag.instances:
            assert inst_.source == source and inst_.target in top - source


@settings(max_examples=60, deadline=None)
@given(bag_instances(), st.permutations(range(7)))
def test_extrinsic_relabeling_and_identity(inst, perm):
    n, k, family, target_dnf, learned_dnf = inst
    fam = oracles.as_core_family(family, n)
    target = elementary_closures(fam, Dnf(target_dnf))
    learned = elementary_closures(fam, Dnf(learned_dnf))
    perm = [p for p in perm if p < n]
    relabel = lambda s: Structuring(n, {perm[x]: {perm[y] for y in v} for x, v in s.items()})  # noqa: E731
    assert extrinsic_measure(relabel(target), relabel(learned)) == pytest.approx(extrinsic_measure(target, learned))
    f = extrinsic_measure(target, learned).f_measure
    assert (f == 1.0) == (target == learned)
    plain = oracles.f_measure({x: set(v) for x, v in target.items()}, {x: set(v) for x, v in learned.items()})
    assert extrinsic_measure(target, learned) == pytest.approx(plain)


def test_running_oracle_agrees_on_the_running_example():
    family = running_plain()
    ref = oracles.bag_counts(family, [{1, 2}, {3}], S1, 4)
    assert ref == {"positive": 11, "negative": 6, "covered_positive": 11, "covered_negative": 0}
