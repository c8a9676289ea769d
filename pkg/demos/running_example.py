"""A tour of the four-element running example.

Loads the neighborhoods and the two target structurings from demos/data,
recomputes the targets from their DNFs, lists the bags that element b
engenders, and scores a few candidate models both ways.

    python3 demos/running_example.py
"""

from pathlib import Path

from pretopolearn.bags import (
    bag_accounts,
    extrinsic_measure,
    format_bags,
    generate_bags_bruteforce,
    intrinsic_measure,
)
from pretopolearn.core import Dnf, closure, elementary_closures, pseudo_closure
from pretopolearn.formats import format_structuring, read_neighborhoods, read_structuring

DATA = Path(__file__).resolve().parent / "data"
NAMES = "abcd"


def show(s):
    return "{" + ", ".join(NAMES[x] for x in sorted(s)) + "}"


def main():
    family = read_neighborhoods(DATA / "running_neighborhoods.txt")
    s1 = read_structuring(DATA / "running_s1.txt", family.n)
    s2 = read_structuring(DATA / "running_s2.txt", family.n)

    q1 = Dnf.parse("(q1 & q2) | q3")
    print("one step of", q1, "from {b}:", show(pseudo_closure(family, q1, {1})))
    print("its fixpoint:", show(closure(family, q1, {1})))
    assert elementary_closures(family, q1) == s1
    assert elementary_closures(family, Dnf.parse("(q1 & q2) | (q3 & q4)")) == s2
    print("\nfirst target structuring:\n" + format_structuring(s1))

    # Each bag instance is a set A and a candidate element y; the features
    # say which predicates q_i(A, y) hold.
    bags = generate_bags_bruteforce(family, s1)
    mine = [b for b in bags if b.origin == {1}]
    print("bags engendered by b, as '+ x A : targets' and '- x y : sources':")
    print(format_bags(mine))

    print(f"{'candidate':<24}{'F':>8}{'h':>8}{'B+ est':>8}{'B- cov':>8}")
    for text in ("q1", "q3", "q1 | q3", "(q1 & q2) | q3", "q1 | q2 | q3 | q4"):
        learned = elementary_closures(family, Dnf.parse(text))
        acc = bag_accounts(s1, learned)
        f = extrinsic_measure(s1, learned).f_measure
        h = intrinsic_measure(s1, learned)
        print(f"{text:<24}{f:8.3f}{h:8.3f}{acc.covered_positive_estimate:8d}{acc.covered_negative:8d}")


if __name__ == "__main__":
    main()
