"""Command line: ``pretopolearn <command> ...``.

Exit status: 0 success, 2 configuration or argument error, 3 parse error,
4 size cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import bags as bagmod
from .core import Dnf, elementary_closures
from .errors import ConfigError, InvalidArgumentError, PretopoError, SizeError
from .experiment import read_experiment, records_csv, run_experiment
from .formats import parse_neighborhoods, parse_structuring
from .learners import LearnerConfig, format_model, learn, parse_config
from .percolation import (
    TARGET_MODELS,
    Grid,
    format_grid,
    generate_obstacle_series,
    moore_family,
    parse_grid,
    render_ascii,
    simulate_fire,
)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _write_or_print(text: str, out) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _looks_like_grid(text: str) -> bool:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    return len(rows) >= 2 and set(rows[1]) <= set(".#")


def load_family(path: str):
    """A neighborhood file, or a grid file turned into its Moore family."""
    text = _read(path)
    if _looks_like_grid(text):
        return moore_family(parse_grid(text, source=path))
    return parse_neighborhoods(text, source=path)


def _model_arg(text: str) -> Dnf:
    name = text.strip().lower()
    if name in TARGET_MODELS:
        return Dnf.parse(TARGET_MODELS[name])
    return Dnf.parse(text)


def _origin_arg(text: str, grid: Grid):
    parts = text.replace(" ", "").split(",")
    try:
        if len(parts) == 2:
            return (int(parts[0]), int(parts[1]))
        if len(parts) == 1:
            return int(parts[0])
    except ValueError:
        pass
    raise InvalidArgumentError(f"origin must be 'row,col' or a cell index, got {text!r}")


def cmd_simulate(args) -> int:
    grid = parse_grid(_read(args.grid), source=args.grid)
    model = _model_arg(args.model)
    origin = _origin_arg(args.origin, grid)
    burnt = simulate_fire(grid, model, origin)
    x = origin if isinstance(origin, int) else grid.index(*origin)
    text = render_ascii(grid, burnt, x) + f"{x}: " + " ".join(map(str, sorted(burnt))) + "\n"
    _write_or_print(text, args.out)
    return 0


def _parse_percentages(text: str) -> tuple:
    try:
        return tuple(float(v) if "." in v else int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad obstacle percentages {text!r}") from None


def cmd_gen_grids(args) -> int:
    series = generate_obstacle_series(args.width, args.height, _parse_percentages(args.obstacles), args.seed)
    out = Path(args.out) if args.out else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create {out}: {exc.strerror}") from None
    for pct, grid in series:
        if out is None:
            sys.stdout.write(f"# {pct:g}% obstacles ({len(grid.obstacles)} cells)\n" + format_grid(grid))
        else:
            path = out / f"grid_{pct:g}.txt"
            path.write_text(format_grid(grid))
            print(f"{path}: {len(grid.obstacles)} obstructed cells")
    return 0


def _learner_config(args) -> LearnerConfig:
    config = parse_config(_read(args.config), source=args.config) if args.config else LearnerConfig()
    overrides = {}
    if args.algorithm is not None:
        overrides["algorithm"] = args.algorithm
    if args.beam is not None:
        overrides["beam_size"] = args.beam
    if args.pop is not None:
        overrides["initial_pop"] = args.pop
    if args.p is not None:
        overrides["p"] = args.p
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    return replace(config, **overrides) if overrides else config


def cmd_learn(args) -> int:
    family = load_family(args.input)
    target = parse_structuring(_read(args.structuring), family.n, source=args.structuring)
    config = _learner_config(args)
    result = learn(family, target, config)
    ext = result.extrinsic
    print(f"model: {format_model(result.model)}")
    print(f"precision: {ext.precision:.6f}")
    print(f"recall: {ext.recall:.6f}")
    print(f"f_measure: {ext.f_measure:.6f}")
    print(f"intrinsic: {result.intrinsic:.6f}")
    print(f"structuring_calls: {result.structuring_calls}")
    print(f"iterations: {result.iterations}")
    print(f"wall_time_s: {result.wall_time:.3f}")
    if args.out:
        _write_or_print(format_model(result.model) + "\n", args.out)
    return 0


def cmd_bags(args) -> int:
    family = load_family(args.input)
    target = parse_structuring(_read(args.structuring), family.n, source=args.structuring)
    if args.oracle and family.n > bagmod.DEFAULT_MAX_ORACLE_UNIVERSE:
        raise SizeError(f"--oracle enumerates every bag and needs n <= {bagmod.DEFAULT_MAX_ORACLE_UNIVERSE}, got {family.n}")
    lines = [
        f"positive_bags: {bagmod.total_positive_bags(target)}",
        f"negative_bags: {bagmod.total_negative_bags(target)}",
    ]
    model = _model_arg(args.candidate) if args.candidate else None
    if model is not None:
        learned = elementary_closures(family, model, target.elements)
        estimate = bagmod.covered_positive_estimate(target, learned)
        negative = bagmod.covered_negative(target, learned)
        lines += [
            f"candidate: {model}",
            f"covered_positive_estimate: {estimate}",
            f"covered_negative: {negative}",
            f"intrinsic: {bagmod.h_score(estimate, negative, args.p if args.p is not None else bagmod.DEFAULT_P):.6f}",
        ]
    if args.oracle:
        all_bags = bagmod.generate_bags_bruteforce(family, target)
        lines.append(f"oracle_positive_bags: {sum(b.positive for b in all_bags)}")
        lines.append(f"oracle_negative_bags: {sum(not b.positive for b in all_bags)}")
        if model is not None:
            counts = bagmod.oracle_counts(all_bags, model)
            lines += [
                f"oracle_covered_positive: {counts.covered_positive}",
                f"oracle_covered_negative: {counts.covered_negative}",
                f"delta_positive: {counts.covered_positive - estimate}",
                f"delta_negative: {counts.covered_negative - negative}",
            ]
    text = "\n".join(lines) + "\n"
    if args.list and args.oracle:
        text += bagmod.format_bags(all_bags)
    _write_or_print(text, args.out)
    return 0


def cmd_experiment(args) -> int:
    config = read_experiment(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.out is not None:
        overrides["output"] = args.out
        overrides["aggregate_output"] = None
    if overrides:
        config = replace(config, **overrides)

    def progress(r):
        print(f"{r.model} rep={r.rep} obstacles={r.obstacle_pct:g}% {r.algorithm} {r.params} "
              f"F={r.f_measure:.4f} calls={r.structuring_calls}", file=sys.stderr)

    try:
        records = run_experiment(config, progress if args.verbose else None)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}") from None
    if config.output:
        print(f"wrote {len(records)} rows to {config.output} (means in {config.aggregate_path()})")
    else:
        sys.stdout.write(records_csv(records))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pretopolearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="burn a grid from one origin and draw it")
    p.add_argument("grid", help="grid file")
    p.add_argument("model", help="DNF text such as 'q4 | q6 | q7', or simple/medium/hard")
    p.add_argument("origin", help="'row,col' or cell index")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-grids", help="write a nested series of obstacle grids")
    p.add_argument("--width", type=int, default=15)
    p.add_argument("--height", type=int, default=15)
    p.add_argument("--obstacles", default="0,10,20,30,40,50,60", help="percentages, comma separated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for grid_<pct>.txt files (default: stdout)")
    p.set_defaults(func=cmd_gen_grids)

    p = sub.add_parser("learn", help="learn a model from target elementary closures")
    p.add_argument("input", help="neighborhood file or grid file")
    p.add_argument("structuring", help="target structuring file")
    p.add_argument("--config", help="learner config (key = value lines)")
    p.add_argument("--algorithm", choices=("genetic_numeric", "genetic_logical", "greedy", "mi"))
    p.add_argument("--beam", type=int)
    p.add_argument("--pop", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="also write the learned model here")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("bags", help="count the bags of a target structuring")
    p.add_argument("input", help="neighborhood file or grid file")
    p.add_argument("structuring", help="target structuring file")
    p.add_argument("candidate", nargs="?", help="candidate DNF to score")
    p.add_argument("--oracle", action="store_true", help="also enumerate every bag (n <= 16)")
    p.add_argument("--list", action="store_true", help="with --oracle, print the bags")
    p.add_argument("--p", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bags)

    p = sub.add_parser("experiment", help="run the forest-fire benchmark")
    p.add_argument("--config", required=True, help="experiment file (INI)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="override the CSV output path")
    p.add_argument("--verbose", action="store_true", help="report each run on stderr")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PretopoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
