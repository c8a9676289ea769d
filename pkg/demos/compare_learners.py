"""Four learners on the running example's two targets.

The second target, (q1 & q2) | (q3 & q4), is a trap for the F-measure:
adding q1 alone already scores well, and after that no single clause
reaches the exact model.  The bag-based measure ranks q1 & q2 first.

    python3 demos/compare_learners.py
"""

from pathlib import Path

from pretopolearn.formats import read_neighborhoods, read_structuring
from pretopolearn.learners import ALGORITHMS, LearnerConfig, learn

DATA = Path(__file__).resolve().parent / "data"


def main():
    family = read_neighborhoods(DATA / "running_neighborhoods.txt")
    for name in ("running_s1.txt", "running_s2.txt"):
        target = read_structuring(DATA / name, family.n)
        print(f"target {name}")
        for algorithm in ALGORITHMS:
            res = learn(family, target, LearnerConfig(algorithm=algorithm, initial_pop=50, rng_seed=1))
            print(f"  {algorithm:<16} F={res.extrinsic.f_measure:.3f} calls={res.structuring_calls:<4} {res.model}")
        print()


if __name__ == "__main__":
    main()
