import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import A, B, C, D, S1, S2, running_family, running_plain
from pretopolearn.core import (
    Dnf,
    NeighborhoodFamily,
    Structuring,
    Universe,
    WeightVector,
    batch_closures,
    closure,
    elementary_closures,
    parse_dnf,
    predicate_eval,
    pseudo_closure,
    pseudo_closure_dnf,
    pseudo_closure_weighted,
    simplify_dnf,
    weights_to_dnf,
)
from pretopolearn.errors import InvalidArgumentError, InvalidModelError, ParseError, SizeError

Q1 = Dnf.parse("(q1 & q2) | q3")
Q2 = Dnf.parse("(q1 & q2) | (q3 & q4)")


# -- worked examples -----------------------------------------------------------------


def test_predicates_on_running_example(running):
    assert predicate_eval(running, 3, {B}, C)
    assert not predicate_eval(running, 2, {B}, D)
    assert not any(predicate_eval(running, i, set(), x) for i in range(1, 5) for x in range(4))


def test_predicate_index_checked(running):
    with pytest.raises(InvalidArgumentError):
        predicate_eval(running, 5, {A}, B)
    with pytest.raises(InvalidArgumentError):
        predicate_eval(running, 0, {A}, B)


def test_pseudo_closure_examples(running):
    assert pseudo_closure_dnf(running, Q1, {A}) == {A, B}
    assert pseudo_closure_dnf(running, Q1, {B, C}) == {B, C, D}
    assert pseudo_closure_dnf(running, Dnf(), {A, C}) == {A, C}


def test_weighted_examples(running):
    w = WeightVector.of(1, 0.5, 0.5, 1, 0)
    assert pseudo_closure_weighted(running, w, {A}) == {A, B}
    assert pseudo_closure_weighted(running, w, {D}) == {D}
    with pytest.raises(InvalidModelError):
        WeightVector.of(2, 0.5, 0.5)


def test_closure_examples(running):
    assert closure(running, Q1, {A}) == {A, B, C, D}
    assert closure(running, Q2, {C}) == {C}
    assert closure(running, Q1, {C, D}) == {C, D}


def test_elementary_closures_match_table(running):
    assert elementary_closures(running, Q1) == Structuring(4, S1)
    assert elementary_closures(running, Q2) == Structuring(4, S2)
    assert elementary_closures(running, Dnf()) == Structuring.identity(4)


def test_weight_vector_reproduces_first_structuring(running):
    w = WeightVector.of(1, 0.5, 0.5, 1, 0)
    assert elementary_closures(running, w) == Structuring(4, S1)


def test_simplify_examples():
    assert simplify_dnf([{1}, {1}]) == Dnf([{1}])
    assert simplify_dnf([{1, 2}, {1}]) == Dnf([{1}])
    messy = [{1, 2}, {1, 3}, {2, 3}, {3}, {1, 2, 3}]
    assert simplify_dnf(messy) == Dnf.parse("(q1 & q2) | q3")


def test_weights_to_dnf_examples():
    assert weights_to_dnf(WeightVector.of(1, 0.5, 0.5, 1), 3) == Dnf.parse("(q1 & q2) | q3")
    assert weights_to_dnf(WeightVector.of(1, 1, 1, 1), 3) == Dnf.parse("q1 | q2 | q3")
    third = 1 / 3
    # 1/3 + 1/3 + 1/3 rounds to exactly 1.0 in binary floating point
    assert weights_to_dnf(WeightVector.of(1, third, third, third), 3) == Dnf.parse("(q1 & q2 & q3)")


def test_weights_to_dnf_cap():
    w = WeightVector(1, (1.0,) * 21)
    with pytest.raises(SizeError):
        weights_to_dnf(w)
    assert len(weights_to_dnf(w, max_k=None).clauses) == 21


# -- grammar ---------------------------------------------------------------------------------


def test_dnf_text_format():
    assert str(Q1) == "(q1 & q2) | q3"
    assert str(Dnf()) == "false"
    assert Dnf.parse("false") == Dnf()
    assert Dnf.parse("  q3|( q2&q1 ) ") == Q1


@pytest.mark.parametrize("text, token", [("q0 |", "q0"), ("q1 |", "end of input"), ("q1 & & q2", "&"),
                                         ("(q1 & q2", "end of input"), ("q1 x", "x"), ("p1", "p1")])
def test_dnf_parse_errors_name_the_token(text, token):
    with pytest.raises(ParseError) as err:
        parse_dnf(text)
    assert token in str(err.value)
    assert err.value.column is not None


def test_universe_and_family_validation():
    with pytest.raises(InvalidArgumentError):
        Universe(("a", "a"))
    with pytest.raises(InvalidArgumentError):
        Universe(())
    with pytest.raises(InvalidArgumentError):
        NeighborhoodFamily(3, [{0: {5}}])
    with pytest.raises(InvalidArgumentError):
        NeighborhoodFamily(3, [])
    fam = running_family()
    assert fam.is_reflexive()
    assert fam.neighborhood(2, B) == {A, B, C}
    assert fam.universe.format_set({A, C}) == "{a, c}"


def test_non_reflexive_family_still_grows():
    fam = NeighborhoodFamily(3, [{0: set(), 1: {0}, 2: set()}], reflexive=False)
    assert not fam.is_reflexive()
    assert pseudo_closure(fam, Dnf.parse("q1"), {0}) == {0, 1}
    assert closure(fam, Dnf.parse("q1"), {2}) == {2}
    for method in ("worklist", "numpy"):
        assert batch_closures(fam, Dnf.parse("q1"), [1, 4], method) == [0b011, 0b100]


def test_structuring_requires_self_membership():
    with pytest.raises(InvalidArgumentError):
        Structuring(3, {0: {1}})
    with pytest.raises(InvalidArgumentError):
        Structuring(3, {4: {4}})


def test_model_must_fit_family(running):
    with pytest.raises(InvalidArgumentError):
        elementary_closures(running, Dnf.parse("q5"))


# -- properties --------------------------------------------------------------------------------


@st.composite
def instances(draw, max_n=8, max_k=5):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    family = oracles.random_family(rng, n, k, rng.choice([0.1, 0.25, 0.5]))
    dnf = oracles.random_dnf(rng, k)
    return n, k, family, dnf, rng


subsets = st.integers(0, 2**8 - 1)


@settings(max_examples=60, deadline=None)
@given(instances(), subsets, subsets)
def test_pseudo_closure_matches_oracle_and_is_isotone(inst, a_bits, b_bits):
    n, k, family, dnf, _ = inst
    fam = oracles.as_core_family(family, n)
    model = Dnf(dnf)
    a = {x for x in range(n) if a_bits >> x & 1}
    b = a | {x for x in range(n) if b_bits >> x & 1}
    pa = pseudo_closure_dnf(fam, model, a)
    assert pa == oracles.pseudo_closure(family, dnf, a, n)
    assert a <= pa
    assert pa <= pseudo_closure_dnf(fam, model, b)
    ca, cb = closure(fam, model, a), closure(fam, model, b)
    assert ca <= cb
    assert closure(fam, model, ca) == ca
    assert pseudo_closure_dnf(fam, model, ca) == ca
    for i in range(1, k + 1):
        for x in range(n):
            if predicate_eval(fam, i, a, x):
                assert predicate_eval(fam, i, b, x)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_structuring_backends_agree_with_oracle(inst):
    n, k, family, dnf, rng = inst
    fam = oracles.as_core_family(family, n)
    model = Dnf(dnf)
    expected = oracles.structuring(family, dnf, n)
    got = elementary_closures(fam, model)
    assert {x: set(v) for x, v in got.items()} == expected
    seeds = [rng.getrandbits(n) for _ in range(5)]
    rows_w = batch_closures(fam, model, seeds, "worklist")
    rows_n = batch_closures(fam, model, seeds, "numpy")
    assert rows_w == rows_n
    for seed, row in zip(seeds, rows_w):
        members = {x for x in range(n) if seed >> x & 1}
        assert {x for x in range(n) if row >> x & 1} == oracles.closure(family, dnf, members, n)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.frozensets(st.integers(1, 6), min_size=1, max_size=4), max_size=7))
def test_simplification_is_sound(raw):
    simplified = simplify_dnf(raw)
    clauses = simplified.clauses
    assert len(set(clauses)) == len(clauses)
    assert not any(a < b for a in clauses for b in clauses)
    assert oracles.truth_table(simplified.clauses, 6) == oracles.truth_table(raw, 6)


@settings(max_examples=60, deadline=None)
@given(instances(max_n=6, max_k=5))
def test_simplification_agrees_on_all_pairs(inst):
    n, k, family, dnf, rng = inst
    fam = oracles.as_core_family(family, n)
    raw = dnf + [set(c) | {rng.randint(1, k)} for c in dnf]
    for bits in range(1 << n):
        a = {x for x in range(n) if bits >> x & 1}
        assert pseudo_closure_dnf(fam, simplify_dnf(raw), a) == oracles.pseudo_closure(family, raw, a, n)


weights = st.lists(st.sampled_from([0.0, 0.125, 0.25, 0.5, 0.75, 1.0, 0.3, 0.7, 1 / 3]), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(instances(max_n=6, max_k=6), weights, st.sampled_from([0.25, 0.5, 1.0, 1.5, 0.9]))
def test_weighted_conversion_equivalence(inst, ws, w0):
    n, k, family, _, _ = inst
    ws = (ws + [0.0] * k)[:k]
    if sum(ws) < w0:
        ws[0] += w0
    w = WeightVector(w0, tuple(ws))
    fam = oracles.as_core_family(family, n)
    dnf = weights_to_dnf(w, k)
    for bits in range(1 << n):
        a = {x for x in range(n) if bits >> x & 1}
        direct = pseudo_closure_weighted(fam, w, a)
        assert direct == pseudo_closure_dnf(fam, dnf, a)
        assert direct == oracles.weighted_pseudo_closure(family, w.threshold, w.weights, a, n)
    # closures computed by the direct weighted step agree with the converted DNF
    assert {x: closure(fam, w, {x}) for x in range(n)} == {x: closure(fam, dnf, {x}) for x in range(n)}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.frozensets(st.integers(1, 9), min_size=1, max_size=4), max_size=6))
def test_dnf_text_round_trip(raw):
    dnf = simplify_dnf(raw)
    assert Dnf.parse(str(dnf)) == dnf


def test_closure_terminates_within_n_steps():
    # a chain 0 -> 1 -> ... -> 9 needs exactly nine productive steps
    fam = NeighborhoodFamily(10, [{x: {x - 1} for x in range(1, 10)}])
    assert closure(fam, Dnf.parse("q1"), {0}) == set(range(10))
    assert elementary_closures(fam, Dnf.parse("q1"), [3]).mask(3) == sum(1 << x for x in range(3, 10))


def test_running_plain_matches_family():
    fam = running_family()
    plain = running_plain()
    for i in range(1, 5):
        for x in range(4):
            assert fam.neighborhood(i, x) == plain[i - 1][x]
