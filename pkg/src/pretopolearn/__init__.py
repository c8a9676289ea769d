"""Learning pretopological propagation models from elementary closures."""

from .bags import (
    Extrinsic,
    IntrinsicScorer,
    bag_accounts,
    covered_negative,
    covered_positive_estimate,
    equivalence_partition,
    extrinsic_measure,
    generate_bags_bruteforce,
    intrinsic_measure,
    total_negative_bags,
    total_positive_bags,
)
from .core import (
    Dnf,
    NeighborhoodFamily,
    Structuring,
    Universe,
    WeightVector,
    closure,
    elementary_closures,
    parse_dnf,
    pseudo_closure,
    pseudo_closure_dnf,
    pseudo_closure_weighted,
    simplify_dnf,
    weights_to_dnf,
)
from .errors import ConfigError, EmptyInputError, InvalidArgumentError, InvalidModelError, ParseError, SizeError
from .learners import LearnerConfig, LearnResult, best_clause, genetic_lps, greedy_lps, learn, mi_lps

__version__ = "0.1.0"
