"""Command-line front end.

    surropt --problem branin.yaml --max-evals 100 --surrogate RBFcub --seed 1

Writes one history record per evaluation (CSV or JSON) and prints a short
summary.  Exit codes: 0 success, 2 configuration error, 3 objective failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import DESIGN_TAGS, load_user_points
from .driver import DriverOptions, RunResult, optimize
from .exceptions import ConfigError, NumericalError, ObjectiveError
from .problem import EvaluationRecord, load_problem
from .sampling import SAMPLING_TAGS
from .surrogate import SURROGATE_TAGS

logger = logging.getLogger(__name__)

DEFAULT_MAX_EVALS = 200
SEED_ENV = "SURROPT_SEED"


@dataclass
class CliConfig:
    problem_path: Path
    max_evals: int = DEFAULT_MAX_EVALS
    surrogate: str = "MIX_RcM"
    sampling: str = "CANDglob"
    design: str = "SLHD"
    design_size: int | None = None
    start_points: Path | None = None
    batch: int = 1
    seed: int | None = None
    workers: int = 1
    output: Path | None = None
    format: str = "csv"
    verbose: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _tag(vocabulary):
    def check(text: str) -> str:
        if text not in vocabulary:
            raise argparse.ArgumentTypeError(
                f"invalid choice {text!r}; valid: {', '.join(vocabulary)}"
            )
        return text

    return check


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="surropt",
        description="Surrogate-model optimization of expensive black-box functions.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "designs:    " + ", ".join(DESIGN_TAGS) + "\n"
            "surrogates: " + ", ".join(SURROGATE_TAGS) + "\n"
            "sampling:   " + ", ".join(SAMPLING_TAGS) + "\n"
            f"The seed falls back to ${SEED_ENV} when --seed is absent."
        ),
    )
    p.add_argument("--problem", required=True, type=Path, help="problem description file (YAML/JSON)")
    p.add_argument("--max-evals", type=_positive_int, default=DEFAULT_MAX_EVALS,
                   help=f"evaluation budget (default {DEFAULT_MAX_EVALS})")
    p.add_argument("--surrogate", type=_tag(SURROGATE_TAGS), default="MIX_RcM",
                   metavar="TAG", help="surrogate model (default MIX_RcM)")
    p.add_argument("--sampling", type=_tag(SAMPLING_TAGS), default="CANDglob",
                   metavar="TAG", help="sampling strategy (default CANDglob)")
    p.add_argument("--design", type=_tag(DESIGN_TAGS), default="SLHD",
                   metavar="TAG", help="initial design (default SLHD)")
    p.add_argument("--design-size", type=_positive_int, default=None,
                   help="initial design size (default 2(d+1), at least the surrogate minimum)")
    p.add_argument("--start-points", type=Path, default=None,
                   help="text file with extra start points, one per row")
    p.add_argument("--batch", type=_positive_int, default=1, help="points per iteration")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--workers", type=_positive_int, default=1, help="concurrent evaluations")
    p.add_argument("--output", type=Path, default=None, help="history file (default: none)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="history format")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def parse_args(argv=None) -> CliConfig:
    """Parse and validate arguments.

    :raises ConfigError: unknown tag, bad number, or missing problem file
    """
    ns = build_parser().parse_args(argv)
    if not ns.problem.is_file():
        raise ConfigError(f"problem file not found: {ns.problem}")
    seed = ns.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer") from None
    return CliConfig(
        problem_path=ns.problem,
        max_evals=ns.max_evals,
        surrogate=ns.surrogate,
        sampling=ns.sampling,
        design=ns.design,
        design_size=ns.design_size,
        start_points=ns.start_points,
        batch=ns.batch,
        seed=seed,
        workers=ns.workers,
        output=ns.output,
        format=ns.format,
        verbose=ns.verbose,
    )


def _num(x) -> str:
    return format(float(x), ".17g")


def history_columns(dim: int) -> list[str]:
    return (
        ["eval_index", "epoch"]
        + [f"x{i + 1}" for i in range(dim)]
        + ["value", "best_so_far", "w_R", "sigma"]
    )


def format_history(records: list[EvaluationRecord], fmt: str = "csv") -> str:
    if not records:
        raise ValueError("no records to write")
    if fmt == "json":
        rows = [
            {
                "eval_index": r.eval_index,
                "epoch": r.epoch,
                "point": [float(v) for v in r.point],
                "value": r.value,
                "best_so_far": r.best_so_far,
                "w_R": r.w_r,
                "sigma": r.sigma,
            }
            for r in records
        ]
        return json.dumps(rows, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown history format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(history_columns(len(records[0].point)))
    for r in records:
        writer.writerow(
            [r.eval_index, r.epoch]
            + [_num(v) for v in r.point]
            + [
                _num(r.value),
                _num(r.best_so_far),
                "" if r.w_r is None else _num(r.w_r),
                "" if r.sigma is None else _num(r.sigma),
            ]
        )
    return buf.getvalue()


def write_history(records: list[EvaluationRecord], fmt: str, path) -> None:
    """Write the evaluation history as CSV (header + one row each) or a JSON array."""
    text = format_history(records, fmt)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write history to {path}: {exc}") from exc


def read_history(path, fmt: str | None = None) -> list[dict]:
    """Inverse of :func:`write_history` (rows as dicts of floats)."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        return json.loads(path.read_text())
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        xs = [float(v) for k, v in row.items() if k.startswith("x")]
        out.append(
            {
                "eval_index": int(row["eval_index"]),
                "epoch": int(row["epoch"]),
                "point": xs,
                "value": float(row["value"]),
                "best_so_far": float(row["best_so_far"]),
                "w_R": float(row["w_R"]) if row["w_R"] else None,
                "sigma": float(row["sigma"]) if row["sigma"] else None,
            }
        )
    return out


def summary(result: RunResult) -> str:
    point = ", ".join(f"{v:.6g}" for v in result.best_point)
    return (
        f"best value:  {result.best_value:.10g}\n"
        f"best point:  [{point}]\n"
        f"evaluations: {result.n_evals}\n"
        f"restarts:    {result.n_restarts}"
    )


def run(config: CliConfig) -> int:
    """Execute an optimization run; returns the process exit code."""
    try:
        spec = load_problem(config.problem_path)
        start = load_user_points(config.start_points, spec) if config.start_points else None
        opts = DriverOptions(
            max_evals=config.max_evals,
            surrogate=config.surrogate,
            sampling=config.sampling,
            design=config.design,
            design_size=config.design_size,
            start_points=start,
            batch=config.batch,
            seed=config.seed,
            workers=config.workers,
        )
        result = optimize(spec, opts)
        if config.output is not None:
            write_history(result.history, config.format, config.output)
    except (ConfigError, ObjectiveError, NumericalError) as exc:
        print(f"surropt: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"surropt: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"surropt: numerical error: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    print(summary(result))
    return 0


def main(argv=None) -> int:
    try:
        config = parse_args(argv)
    except ConfigError as exc:
        print(f"surropt: error: {exc}", file=sys.stderr)
        print("run 'surropt --help' for the list of options and tags", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(
        level=logging.INFO if config.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
