import pytest

from pretopolearn.core import NeighborhoodFamily, Structuring, Universe

A, B, C, D = range(4)

# The four-element running example: a, b, c, d
RUNNING = [
    {A: {B}, B: {A}, D: {B}},
    {B: {A, C}, D: {C}},
    {D: {C}, C: {B}},
    {A: {B}, B: {C}, C: {B}},
]
S1 = {A: {A, B, C, D}, B: {B, C, D}, C: {C, D}, D: {D}}
S2 = {A: {A, B, C, D}, B: {B, C, D}, C: {C}, D: {D}}


def running_family():
    return NeighborhoodFamily(Universe(("a", "b", "c", "d")), RUNNING)


def running_plain():
    """Same family as plain sets, reflexive, for the oracles."""
    return [{x: {x} | v.get(x, set()) for x in range(4)} for v in RUNNING]


@pytest.fixture
def running():
    return running_family()


@pytest.fixture
def s1():
    return Structuring(4, S1)


@pytest.fixture
def s2():
    return Structuring(4, S2)


# -- acceptance report ------------------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
