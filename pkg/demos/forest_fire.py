"""Learn a fire-spread rule from a handful of observed fires.

A 12x12 grid with 20% obstacles burns under the "medium" rule.  We watch
fires lit in 30% of the inflammable cells, then ask the greedy and MI
learners to recover the rule and check it on every cell.

    python3 demos/forest_fire.py
"""

from pretopolearn.bags import extrinsic_measure
from pretopolearn.learners import LearnerConfig, learn
from pretopolearn.percolation import (
    build_training_structuring,
    fire_structuring,
    generate_obstacle_series,
    moore_family,
    render_ascii,
    simulate_fire,
    target_model,
)


def main():
    (_, grid), = generate_obstacle_series(12, 12, (20,), rng_seed=5)
    rule = target_model("medium")
    origin = (0, 11)
    print(f"rule {rule}, fire lit at {origin}:")
    print(render_ascii(grid, simulate_fire(grid, rule, origin), origin))

    train = build_training_structuring(grid, rule, 0.3, rng_seed=6)
    truth = fire_structuring(grid, rule)
    print(f"{len(train)} observed fires out of {len(truth)} inflammable cells")
    for algorithm in ("greedy", "mi"):
        res = learn(moore_family(grid), train, LearnerConfig(algorithm=algorithm, beam_size=5))
        f = extrinsic_measure(truth, res.structuring.restrict(truth.elements)).f_measure
        print(f"  {algorithm:<6} learned {res.model}  (F on all cells {f:.4f}, {res.structuring_calls} structurings)")


if __name__ == "__main__":
    main()
