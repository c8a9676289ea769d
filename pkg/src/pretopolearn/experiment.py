"""The forest-fire benchmark: learners compared on nested obstacle grids.

An experiment file is INI-style::

    [experiment]
    model = simple
    width = 15
    height = 15
    obstacles = 0, 10, 20, 30, 40, 50, 60
    fraction = 0.3
    repetitions = 10
    seed = 1
    output = runs.csv

    [learner.mi5]
    algorithm = mi
    beam_size = 5

Without any ``[learner.*]`` section the default ladder is used: both genetic
learners with populations 100 and 500, greedy and MI with beams 1 and 5.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from .bags import extrinsic_measure
from .errors import ConfigError
from .learners import LearnerConfig, config_from_mapping, learn
from .percolation import (
    TARGET_MODELS,
    build_training_structuring,
    fire_structuring,
    generate_obstacle_series,
    moore_family,
    target_model,
)

CSV_HEADER = (
    "model", "obstacle_pct", "rep", "algorithm", "params",
    "f_measure", "intrinsic", "structuring_calls", "wall_time_s", "learned",
)
AGGREGATE_HEADER = (
    "model", "obstacle_pct", "algorithm", "params", "runs",
    "mean_f_measure", "mean_intrinsic", "mean_structuring_calls", "mean_wall_time_s",
)
DEFAULT_OBSTACLES = (0, 10, 20, 30, 40, 50, 60)


def default_ladder(max_iter: int = 10) -> tuple:
    ladder = []
    for algorithm in ("genetic_numeric", "genetic_logical"):
        for pop in (100, 500):
            ladder.append(LearnerConfig(algorithm=algorithm, initial_pop=pop, max_iter=100))
    for algorithm in ("greedy", "mi"):
        for beam in (1, 5):
            ladder.append(LearnerConfig(algorithm=algorithm, beam_size=beam, max_iter=max_iter))
    return tuple(ladder)


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "simple"
    width: int = 15
    height: int = 15
    obstacles: tuple = DEFAULT_OBSTACLES
    fraction: float = 0.3
    repetitions: int = 10
    learners: tuple = ()
    rng_seed: int = 0
    output: Optional[str] = None
    aggregate_output: Optional[str] = None

    def __post_init__(self):
        if self.model.lower() not in TARGET_MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(TARGET_MODELS)}")
        if self.width < 1 or self.height < 1:
            raise ConfigError("grid width and height must be positive")
        if not 0 < self.fraction <= 1:
            raise ConfigError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.learners:
            raise ConfigError("at least one learner configuration is required")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def aggregate_path(self) -> Optional[str]:
        if self.aggregate_output or not self.output:
            return self.aggregate_output
        path = Path(self.output)
        return str(path.with_name(path.stem + "_mean" + (path.suffix or ".csv")))


def parse_experiment(text: str, source=None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source or "<experiment>")
    except configparser.Error as exc:
        raise ConfigError(f"{source or 'experiment'}: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    sec = parser["experiment"]
    known = {"model", "width", "height", "obstacles", "fraction", "repetitions", "seed", "output", "aggregate"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown [experiment] keys: {', '.join(sorted(unknown))}")
    try:
        obstacles = tuple(float(v) if "." in v else int(v) for v in sec.get("obstacles", "").replace(",", " ").split())
        kwargs = dict(
            model=sec.get("model", "simple"),
            width=sec.getint("width", 15),
            height=sec.getint("height", 15),
            obstacles=obstacles or DEFAULT_OBSTACLES,
            fraction=sec.getfloat("fraction", 0.3),
            repetitions=sec.getint("repetitions", 10),
            rng_seed=int(sec.get("seed", "0"), 0),
            output=sec.get("output"),
            aggregate_output=sec.get("aggregate"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [experiment] value: {exc}") from None
    learners = []
    for name in parser.sections():
        if name.startswith("learner"):
            learners.append(config_from_mapping(dict(parser[name])))
        elif name != "experiment":
            raise ConfigError(f"unknown section [{name}]")
    return ExperimentConfig(learners=tuple(learners) or default_ladder(), **kwargs)


def read_experiment(path) -> ExperimentConfig:
    return parse_experiment(Path(path).read_text(), source=str(path))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from any sequence of printable parts."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RunRecord:
    model: str
    obstacle_pct: float
    rep: int
    algorithm: str
    params: str
    f_measure: float
    intrinsic: float
    structuring_calls: int
    wall_time: float
    learned: str

    def sort_key(self):
        return (self.model, self.rep, self.obstacle_pct, self.algorithm, self.params)

    def row(self) -> list:
        return [
            self.model, f"{self.obstacle_pct:g}", str(self.rep), self.algorithm, self.params,
            f"{self.f_measure:.6f}", f"{self.intrinsic:.6f}", str(self.structuring_calls),
            f"{self.wall_time:.3f}", self.learned,
        ]


def training_target(config: ExperimentConfig, rep: int, pct, grid):
    sample_seed = derive_seed(config.rng_seed, config.model, rep, pct, "sample")
    return build_training_structuring(grid, target_model(config.model), config.fraction, sample_seed)


def run_cell(config: ExperimentConfig, rep: int, pct, grid, learner: LearnerConfig,
             target=None, full=None) -> RunRecord:
    """One learner on one grid; ``target`` and ``full`` are recomputed when omitted."""
    if target is None:
        target = training_target(config, rep, pct, grid)
    if full is None:
        full = fire_structuring(grid, target_model(config.model))
    run_seed = derive_seed(config.rng_seed, config.model, rep, pct, learner.algorithm, learner.tag())
    result = learn(moore_family(grid), target, replace(learner, rng_seed=run_seed))
    # quality is judged on every inflammable cell, not only the training sample
    f = extrinsic_measure(full, result.structuring.restrict(full.elements)).f_measure
    return RunRecord(
        model=config.model, obstacle_pct=pct, rep=rep, algorithm=learner.algorithm, params=learner.tag(),
        f_measure=f, intrinsic=result.intrinsic, structuring_calls=result.structuring_calls,
        wall_time=result.wall_time, learned=str(result.model),
    )


def run_experiment(config: ExperimentConfig, progress: Callable[[RunRecord], None] = None) -> list:
    """All runs, sorted by (model, rep, obstacle_pct, algorithm, params).

    Output files named in ``config`` are opened before any learning so that an
    unwritable path fails fast.
    """
    handles = []
    try:
        for path in (config.output, config.aggregate_path()):
            if path:
                handles.append(open(path, "w", newline=""))
        records = []
        for rep in range(config.repetitions):
            series = generate_obstacle_series(
                config.width, config.height, config.obstacles, derive_seed(config.rng_seed, config.model, rep, "grid")
            )
            for pct, grid in series:
                target = training_target(config, rep, pct, grid)
                full = fire_structuring(grid, target_model(config.model))
                for learner in config.learners:
                    record = run_cell(config, rep, pct, grid, learner, target, full)
                    records.append(record)
                    if progress is not None:
                        progress(record)
        records.sort(key=RunRecord.sort_key)
        if handles:
            handles[0].write(records_csv(records))
        if len(handles) > 1:
            handles[1].write(aggregate_csv(records))
        return records
    finally:
        for h in handles:
            h.close()


def records_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(records, key=RunRecord.sort_key):
        writer.writerow(r.row())
    return out.getvalue()


def aggregate(records) -> list:
    """Mean metrics per (model, obstacle_pct, algorithm, params)."""
    groups = {}
    for r in records:
        groups.setdefault((r.model, r.obstacle_pct, r.algorithm, r.params), []).append(r)
    rows = []
    for key in sorted(groups):
        rs = groups[key]
        k = len(rs)
        rows.append(key + (
            k,
            sum(r.f_measure for r in rs) / k,
            sum(r.intrinsic for r in rs) / k,
            sum(r.structuring_calls for r in rs) / k,
            sum(r.wall_time for r in rs) / k,
        ))
    return rows


def aggregate_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(AGGREGATE_HEADER)
    for model, pct, algorithm, params, k, f, h, calls, wall in aggregate(records):
        writer.writerow([model, f"{pct:g}", algorithm, params, k, f"{f:.6f}", f"{h:.6f}", f"{calls:.1f}", f"{wall:.3f}"])
    return out.getvalue()

