"""Learning a pseudo-closure from target elementary closures.

Four strategies share one scoring scaffold:

* ``genetic_numeric``: genetic search over weight vectors, extrinsic fitness;
* ``genetic_logical``: genetic search over positive DNFs, extrinsic fitness;
* ``greedy``: clause-by-clause beam search driven by the F-measure;
* ``mi``: the same clause-by-clause search driven by the bag-based intrinsic
  measure.

Every distinct model scored costs one structuring (all elementary closures of
the target's elements); models are cached so a repeated candidate is free.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields
from typing import Optional, Union

import numpy as np

from .bags import DEFAULT_P, Extrinsic, IntrinsicScorer, extrinsic_measure
from .core import Dnf, NeighborhoodFamily, Structuring, WeightVector, _weight_sum, elementary_closures, weights_to_dnf
from .errors import ConfigError, InvalidArgumentError, ParseError

ALGORITHMS = ("genetic_numeric", "genetic_logical", "greedy", "mi")

WEIGHT_FLOOR = 1e-6
MUTATION_NOISE = 0.25


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "greedy"
    max_iter: int = 10
    beam_size: int = 1
    initial_pop: int = 100
    required_iter_convergence: int = 5
    mutation_rate: float = 0.1
    crossover_rate: float = 0.8
    p: float = DEFAULT_P
    rng_seed: int = 0
    # wall-clock cap in seconds, checked between two structurings
    time_budget_s: Optional[float] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.beam_size < 1:
            raise ConfigError("beam_size must be >= 1")
        if self.algorithm.startswith("genetic") and self.initial_pop < 2:
            raise ConfigError("initial_pop must be >= 2 for genetic learners")
        if self.required_iter_convergence < 1:
            raise ConfigError("required_iter_convergence must be >= 1")
        for name in ("mutation_rate", "crossover_rate"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if not self.p >= 0:
            raise ConfigError(f"p must be >= 0, got {self.p}")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        if self.time_budget_s is not None and not self.time_budget_s > 0:
            raise ConfigError("time_budget_s must be positive")

    @property
    def measure(self) -> str:
        return "intrinsic" if self.algorithm == "mi" else "extrinsic"

    def tag(self) -> str:
        """Short parameter label, e.g. ``beam=5`` or ``pop=100``."""
        if self.algorithm.startswith("genetic"):
            return f"pop={self.initial_pop}"
        return f"beam={self.beam_size}"


def _convert(name: str, raw: str):
    text = raw.strip()
    if name == "time_budget_s":
        return None if text.lower() in ("", "none") else float(text)
    if name in ("max_iter", "beam_size", "initial_pop", "required_iter_convergence", "rng_seed"):
        return int(text, 0)
    if name in ("mutation_rate", "crossover_rate", "p"):
        return float(text)
    return text


def config_from_mapping(values, base: LearnerConfig = None) -> LearnerConfig:
    known = {f.name: f for f in fields(LearnerConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"unknown learner config key {key!r}")
        try:
            kwargs[key] = _convert(key, str(raw))
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if base is None:
        return LearnerConfig(**kwargs)
    merged = {f: getattr(base, f) for f in known}
    merged.update(kwargs)
    return LearnerConfig(**merged)


def parse_config(text: str, source=None) -> LearnerConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno, 1, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"duplicate learner config key {key!r}")
        values[key] = value
    return config_from_mapping(values)


def format_config(config: LearnerConfig) -> str:
    lines = []
    for f in fields(LearnerConfig):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"


def format_model(model) -> str:
    return str(model)


def parse_model(text: str) -> Union[Dnf, WeightVector]:
    """A DNF (``(q1 & q2) | q3``) or a weight vector (``w0 w1 ... wk``)."""
    stripped = text.strip()
    if stripped[:1].isdigit() or stripped[:1] in ".+":
        return WeightVector.parse(stripped)
    return Dnf.parse(stripped)


@dataclass
class LearnResult:
    model: Union[Dnf, WeightVector]
    final_score: float
    structuring: Structuring
    iterations: int
    structuring_calls: int
    wall_time: float
    algorithm: str = ""
    extrinsic: Extrinsic = None
    intrinsic: float = 0.0
    # scores of the models accepted along the way, in order
    history: tuple = field(default_factory=tuple)

    def summary(self) -> dict:
        """Every field except the wall time, for reproducibility checks."""
        return {
            "model": str(self.model),
            "final_score": self.final_score,
            "structuring": self.structuring,
            "iterations": self.iterations,
            "structuring_calls": self.structuring_calls,
            "extrinsic": tuple(self.extrinsic),
            "intrinsic": self.intrinsic,
            "history": self.history,
        }


class BudgetExceeded(Exception):
    pass


class Evaluator:
    """Scores models against one target, one structuring per distinct DNF."""

    def __init__(self, family: NeighborhoodFamily, target: Structuring, measure: str = "extrinsic",
                 p: float = DEFAULT_P, deadline: float = None):
        if target.n != family.n:
            raise InvalidArgumentError(f"target has {target.n} elements but the family has {family.n}")
        if measure == "extrinsic":
            self._measure = lambda s: extrinsic_measure(target, s).f_measure
        elif measure == "intrinsic":
            self._measure = IntrinsicScorer(target, p).exact
        else:
            raise InvalidArgumentError(f"unknown measure {measure!r}")
        self.family = family
        self.target = target
        self.measure = measure
        self.deadline = deadline
        self.calls = 0
        self._cache = {}

    def expired(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline

    def _lookup(self, model):
        dnf = weights_to_dnf(model, self.family.k) if isinstance(model, WeightVector) else model
        hit = self._cache.get(dnf)
        if hit is None:
            if self.expired():
                raise BudgetExceeded
            structuring = elementary_closures(self.family, dnf, self.target.elements)
            self.calls += 1
            masks = tuple(structuring.masks().values())
            hit = self._cache[dnf] = (self._measure(structuring), masks)
        return hit

    def score(self, model):
        return self._lookup(model)[0]

    def same_structuring(self, a, b) -> bool:
        return self._lookup(a)[1] == self._lookup(b)[1]


def _clause_key(score: float, clause: frozenset):
    return (-score, len(clause), tuple(sorted(clause)))


def best_clause(family: NeighborhoodFamily, target: Structuring, current: Dnf, beam_size: int,
                measure="extrinsic", p: float = DEFAULT_P) -> Optional[frozenset]:
    """Beam search for the clause whose addition to ``current`` scores best.

    ``measure`` is ``"extrinsic"``, ``"intrinsic"`` or an :class:`Evaluator`.
    Clauses already subsumed by ``current`` are never proposed.  Returns the
    best clause found at any depth, or ``None`` when there is no candidate.
    """
    if beam_size < 1:
        raise InvalidArgumentError("beam_size must be >= 1")
    evaluator = measure if isinstance(measure, Evaluator) else Evaluator(family, target, measure, p)
    level = [frozenset({i}) for i in range(1, family.k + 1)]
    best = None
    while level:
        scored = []
        for clause in level:
            if current.subsumes(clause):
                continue
            score = evaluator.score(current.with_clause(clause))
            scored.append((_clause_key(score, clause), clause))
        if not scored:
            break
        scored.sort()
        if best is None or scored[0][0] < best[0]:
            best = scored[0]
        # A clause that leaves the structuring unchanged has specializations
        # that leave it unchanged too, so it would only waste a beam slot.
        live = [c for _, c in scored if not evaluator.same_structuring(current.with_clause(c), current)]
        beam = live[:beam_size]
        nxt = {c | {i} for c in beam for i in range(1, family.k + 1) if i not in c}
        level = sorted(nxt, key=lambda c: tuple(sorted(c)))
    return None if best is None else best[1]


def _finish(family, target, model, score, iterations, evaluator, started, algorithm, history, p) -> LearnResult:
    structuring = elementary_closures(family, model)
    train = structuring.restrict(target.elements)
    return LearnResult(
        model=model,
        final_score=float(score),
        structuring=structuring,
        iterations=iterations,
        structuring_calls=evaluator.calls,
        wall_time=time.perf_counter() - started,
        algorithm=algorithm,
        extrinsic=extrinsic_measure(target, train),
        intrinsic=IntrinsicScorer(target, p)(train),
        history=tuple(float(h) for h in history),
    )


def _deadline(config: LearnerConfig, started: float):
    return None if config.time_budget_s is None else started + config.time_budget_s


def _clause_search(family, target, config: LearnerConfig, measure: str) -> LearnResult:
    started = time.perf_counter()
    evaluator = Evaluator(family, target, measure, config.p)
    model = Dnf()
    # the empty-model baseline is always scored, whatever the budget
    score = evaluator.score(model)
    evaluator.deadline = _deadline(config, started)
    history = [score]
    iterations = 0
    try:
        while iterations < config.max_iter:
            iterations += 1
            clause = best_clause(family, target, model, config.beam_size, evaluator)
            if clause is None:
                break
            candidate = model.with_clause(clause)
            candidate_score = evaluator.score(candidate)
            if candidate_score <= score:
                break
            model, score = candidate, candidate_score
            history.append(score)
    except BudgetExceeded:
        pass
    return _finish(family, target, model, score, iterations, evaluator, started, config.algorithm, history, config.p)


def greedy_lps(family: NeighborhoodFamily, target: Structuring, config: LearnerConfig) -> LearnResult:
    if config.algorithm != "greedy":
        raise ConfigError(f"greedy_lps needs algorithm=greedy, got {config.algorithm}")
    return _clause_search(family, target, config, "extrinsic")


def mi_lps(family: NeighborhoodFamily, target: Structuring, config: LearnerConfig) -> LearnResult:
    if config.algorithm != "mi":
        raise ConfigError(f"mi_lps needs algorithm=mi, got {config.algorithm}")
    return _clause_search(family, target, config, "intrinsic")


# -- genetic search -------------------------------------------------------------


def project_weights(values, floor: float = WEIGHT_FLOOR) -> WeightVector:
    """Nearest-in-spirit feasible weight vector: clip, floor ``w0``, rescale up."""
    w0 = max(float(values[0]), floor)
    ws = [max(float(v), 0.0) for v in values[1:]]
    total = _weight_sum(ws, range(len(ws)))
    if total == 0:
        ws = [w0 / len(ws)] * len(ws)
    elif total < w0:
        ws = [w * (w0 / total) for w in ws]
    total = _weight_sum(ws, range(len(ws)))
    if total < w0:
        # rounding left the sum a hair short
        w0 = total
    return WeightVector(w0, tuple(ws))


class _NumericOps:
    def __init__(self, k: int):
        self.k = k

    def random(self, rng):
        return project_weights(rng.random(self.k + 1))

    def crossover(self, a: WeightVector, b: WeightVector, rng):
        va = np.array((a.threshold,) + a.weights)
        vb = np.array((b.threshold,) + b.weights)
        alpha = rng.random()
        return project_weights(alpha * va + (1 - alpha) * vb), project_weights((1 - alpha) * va + alpha * vb)

    def mutate(self, w: WeightVector, rng):
        v = np.array((w.threshold,) + w.weights)
        return project_weights(v + rng.uniform(-MUTATION_NOISE, MUTATION_NOISE, size=v.shape))


class _LogicalOps:
    def __init__(self, k: int):
        self.k = k

    def _random_clause(self, rng):
        while True:
            picks = rng.random(self.k) < 0.5
            if picks.any():
                return [i + 1 for i in np.flatnonzero(picks).tolist()]

    def random(self, rng):
        count = int(rng.integers(1, self.k + 1))
        return Dnf(self._random_clause(rng) for _ in range(count))

    def crossover(self, a: Dnf, b: Dnf, rng):
        left, right = [], []
        for clause in a.clauses + b.clauses:
            (left if rng.random() < 0.5 else right).append(clause)
        return Dnf(left), Dnf(right)

    def mutate(self, dnf: Dnf, rng):
        clauses = [set(c) for c in dnf.clauses]
        move = int(rng.integers(4))
        if move == 0 and clauses:
            c = clauses[int(rng.integers(len(clauses)))]
            c.add(int(rng.integers(1, self.k + 1)))
        elif move == 1 and clauses:
            j = int(rng.integers(len(clauses)))
            c = sorted(clauses[j])
            c.pop(int(rng.integers(len(c))))
            if c:
                clauses[j] = set(c)
            else:
                clauses.pop(j)
        elif move == 2 or not clauses:
            clauses.append({int(rng.integers(1, self.k + 1))})
        else:
            clauses.pop(int(rng.integers(len(clauses))))
        return Dnf(clauses)


def genetic_lps(family: NeighborhoodFamily, target: Structuring, config: LearnerConfig,
                initial_population=None) -> LearnResult:
    """Generational genetic search with tournament selection and one elite.

    ``initial_population`` replaces the random first generation when given.
    """
    if config.algorithm not in ("genetic_numeric", "genetic_logical"):
        raise ConfigError(f"genetic_lps needs a genetic algorithm, got {config.algorithm}")
    started = time.perf_counter()
    evaluator = Evaluator(family, target, "extrinsic", config.p, _deadline(config, started))
    rng = np.random.default_rng(config.rng_seed)
    ops = _NumericOps(family.k) if config.algorithm == "genetic_numeric" else _LogicalOps(family.k)
    if initial_population is not None:
        population = list(initial_population)
        if len(population) < 2:
            raise ConfigError("the initial population needs at least two individuals")
    else:
        population = [ops.random(rng) for _ in range(config.initial_pop)]
    size = len(population)

    best_model, score = None, 0.0
    history = []
    iterations = conv = 0
    try:
        while iterations < config.max_iter:
            iterations += 1
            scores = [evaluator.score(ind) for ind in population]
            top = max(range(size), key=lambda j: (scores[j], -j))
            if best_model is None or scores[top] > score:
                best_model, score, conv = population[top], scores[top], 1
                history.append(score)
            elif scores[top] == score:
                conv += 1
                if conv >= config.required_iter_convergence:
                    break
            population = _next_generation(population, scores, top, ops, config, rng)
    except BudgetExceeded:
        pass
    if best_model is None:
        # the budget ran out inside the first generation
        best_model = population[0]
        hit = evaluator._cache.get(
            weights_to_dnf(best_model, family.k) if isinstance(best_model, WeightVector) else best_model)
        score = 0.0 if hit is None else hit[0]
    return _finish(family, target, best_model, score, iterations, evaluator, started, config.algorithm, history,
                   config.p)


def _tournament(scores, rng) -> int:
    a, b = rng.integers(len(scores), size=2).tolist()
    if scores[a] != scores[b]:
        return a if scores[a] > scores[b] else b
    return min(a, b)


def _next_generation(population, scores, elite, ops, config, rng):
    nxt = [population[elite]]
    while len(nxt) < len(population):
        a = population[_tournament(scores, rng)]
        b = population[_tournament(scores, rng)]
        children = ops.crossover(a, b, rng) if rng.random() < config.crossover_rate else (a, b)
        for child in children:
            if rng.random() < config.mutation_rate:
                child = ops.mutate(child, rng)
            nxt.append(child)
    return nxt[: len(population)]


def learn(family: NeighborhoodFamily, target: Structuring, config: LearnerConfig) -> LearnResult:
    if not len(target):
        raise InvalidArgumentError("the target structuring is empty")
    if config.algorithm == "greedy":
        return greedy_lps(family, target, config)
    if config.algorithm == "mi":
        return mi_lps(family, target, config)
    return genetic_lps(family, target, config)


def exhaustive_clauses(k: int):
    """Every non-empty clause over ``q1 .. qk`` (test and demo helper)."""
    for bits in range(1, 1 << k):
        yield frozenset(i + 1 for i in range(k) if bits >> i & 1)


__all__ = [
    "ALGORITHMS",
    "Evaluator",
    "LearnResult",
    "LearnerConfig",
    "best_clause",
    "config_from_mapping",
    "exhaustive_clauses",
    "format_config",
    "format_model",
    "genetic_lps",
    "greedy_lps",
    "learn",
    "mi_lps",
    "parse_config",
    "parse_model",
    "project_weights",
]
