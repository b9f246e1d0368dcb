"""Command-line front end.

Subcommands:
  point       bounds for one observed violation
  sweep       bound curves over a violation grid, CSV/JSON (optionally a figure)
  validate    run a property suite, nonzero exit on any failure
  export-sdp  emit the moment-relaxation problem in the JSON interchange form

Flags can also be supplied through ``--config file.json`` holding the same
keys; explicit flags win.  ``ETACERT_THREADS`` caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic, npa, quantum, validation
from .behavior import DomainError
from .quantum import InfeasibleViolationError, SearchConfig

SWEEP_COLUMNS = (
    "e_obs",
    "eta_qr",
    "eta_npa_l1",
    "eta_npa_l1ab",
    "eta_npa_l2",
    "eta_ns",
    "xi",
    "wall_time",
    "status",
)

_LEVEL_COLUMN = {"1": "eta_npa_l1", "1+AB": "eta_npa_l1ab", "2": "eta_npa_l2"}

_DEFAULT_GRID = (0.001, quantum.Q_MAX_VIOLATION, 30)


@dataclass(frozen=True)
class SweepSpec:
    """Grid and bound selection for one sweep run."""

    e_min: float
    e_max: float
    points: int
    xi: float
    levels: tuple[str, ...]
    tol: float
    outputs: frozenset
    seed: int
    restarts: int
    output_path: str | None

    def __post_init__(self):
        if not (0.0 < self.e_min <= self.e_max <= quantum.Q_MAX_VIOLATION + 1e-12):
            raise DomainError(
                f"violation grid must lie in (0, {quantum.Q_MAX_VIOLATION:.6f}]"
            )
        if self.points < 1:
            raise DomainError("need at least one grid point")
        bad = self.outputs - {"qr", "npa", "analytic"}
        if bad:
            raise DomainError(f"unknown outputs {sorted(bad)}")
        for level in self.levels:
            if level not in _LEVEL_COLUMN:
                raise DomainError(f"unknown level {level!r}")

    def grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.e_min])
        return np.geomspace(self.e_min, self.e_max, self.points)


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _sweep_row(task: dict) -> dict:
    """One grid point; failures land in the status column, not exceptions."""
    start = time.perf_counter()
    row: dict = {key: None for key in SWEEP_COLUMNS}
    row["e_obs"] = task["e"]
    row["xi"] = task["xi"]
    failures = []
    if "analytic" in task["outputs"] and task["xi"] == 0.0:
        try:
            row["eta_ns"] = analytic.eta_ns(task["e"])
        except DomainError as exc:
            failures.append(f"analytic: {exc}")
    if "npa" in task["outputs"]:
        for level in task["levels"]:
            try:
                result = npa.min_efficiency_npa(task["e"], task["xi"], task["tol"], level)
                row[_LEVEL_COLUMN[level]] = result.eta
            except (DomainError, InfeasibleViolationError) as exc:
                failures.append(f"npa-{level}: {exc}")
    if "qr" in task["outputs"]:
        cfg = SearchConfig(restarts=task["restarts"], rng_seed=task["seed"])
        try:
            row["eta_qr"] = quantum.min_efficiency_qr(
                task["e"], task["xi"], task["tol"], cfg
            ).eta
        except (DomainError, InfeasibleViolationError) as exc:
            failures.append(f"qr: {exc}")
    row["wall_time"] = time.perf_counter() - start
    row["status"] = "; ".join(failures) if failures else "ok"
    return row


def run_sweep(spec: SweepSpec) -> list[dict]:
    tasks = [
        {
            "e": float(e),
            "xi": spec.xi,
            "levels": spec.levels,
            "outputs": spec.outputs,
            "tol": spec.tol,
            "restarts": spec.restarts,
            "seed": spec.seed + 7919 * index,
        }
        for index, e in enumerate(spec.grid())
    ]
    workers = _worker_count(len(tasks))
    if workers <= 1:
        return [_sweep_row(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_row, tasks))


def _worker_count(task_count: int) -> int:
    cap = os.environ.get("ETACERT_THREADS")
    workers = os.cpu_count() or 1
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise DomainError(f"ETACERT_THREADS must be an integer, got {cap!r}")
    return min(workers, task_count)


def sweep_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([_format_value(row[key]) for key in SWEEP_COLUMNS])
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _write_output(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_point(args) -> int:
    record: dict = {"e_obs": args.e, "xi": args.xi}
    try:
        if args.xi == 0.0:
            record["eta_ns"] = analytic.eta_ns(args.e)
        npa_result = npa.min_efficiency_npa(args.e, args.xi, args.tol, args.level)
        record["eta_npa"] = npa_result.eta
        record["npa_level"] = npa_result.level
        record["npa_iterations"] = npa_result.iterations
        cfg = SearchConfig(restarts=args.restarts, rng_seed=args.seed)
        qr = quantum.min_efficiency_qr(args.e, args.xi, args.tol, cfg)
        record["eta_qr"] = qr.eta
        record["qr_witness_angles"] = list(qr.realization.angles)
        record["qr_achieved_violation"] = qr.achieved_value
    except InfeasibleViolationError as exc:
        sys.stderr.write(
            f"error: violation {exc.e_obs:.6g} is not achievable at this noise "
            f"level; the maximum is {exc.achievable_max:.6f}\n"
        )
        return 2
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2

    if args.format == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        lines = [f"observed violation {args.e:.9g} (dark-count rate {args.xi:g})"]
        lines.append(f"  eta_qr  = {record['eta_qr']:.8f}  (upper bound, search witness)")
        lines.append(
            f"  eta_npa = {record['eta_npa']:.8f}  (certified lower bound, level {args.level})"
        )
        if "eta_ns" in record:
            lines.append(f"  eta_ns  = {record['eta_ns']:.8f}  (closed-form lower bound)")
        lines.append(
            f"  witness achieves {record['qr_achieved_violation']:.9g} at eta_qr"
        )
        text = "\n".join(lines) + "\n"
    _write_output(text, args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        e_min=args.e_min,
        e_max=args.e_max,
        points=args.points,
        xi=args.xi,
        levels=tuple(args.levels.split(",")) if args.levels else ("2",),
        tol=args.tol,
        outputs=frozenset(args.outputs.split(",")),
        seed=args.seed,
        restarts=args.restarts,
        output_path=args.out,
    )
    rows = run_sweep(spec)
    if args.format == "json":
        text = json.dumps(rows, indent=2, default=float) + "\n"
    else:
        text = sweep_csv(rows)
    _write_output(text, args.out)
    if args.plot is not None:
        from .plots import render_sweep_figure

        plot_path = args.plot
        if plot_path == "auto":
            if not args.out:
                sys.stderr.write("error: --plot without a path needs --out\n")
                return 2
            plot_path = os.path.splitext(args.out)[0] + ".png"
        render_sweep_figure(rows, plot_path)
    failed = [row for row in rows if row["status"] != "ok"]
    if failed:
        sys.stderr.write(f"note: {len(failed)} of {len(rows)} grid points reported failures\n")
    return 0


def cmd_validate(args) -> int:
    kwargs = {}
    if args.seed is not None:
        kwargs["rng_seed"] = args.seed
    results = validation.run_suite(args.suite, **kwargs)
    if args.format == "json":
        payload = [
            {
                "name": r.name,
                "passed": r.passed,
                "measured": r.measured,
                "tolerance": r.tolerance,
                "detail": r.detail,
            }
            for r in results
        ]
        _write_output(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = [r.line() for r in results]
        failed = sum(not r.passed for r in results)
        lines.append(f"{len(results) - failed}/{len(results)} properties passed")
        _write_output("\n".join(lines) + "\n", args.out)
    return 0 if all(r.passed for r in results) else 1


def cmd_export_sdp(args) -> int:
    doc = npa.sdp_interchange(args.eta, args.xi, args.level)
    _write_output(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _apply_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Fill values from --config for flags left at their defaults."""
    if not getattr(args, "config", None):
        return
    with open(args.config, encoding="utf-8") as handle:
        config = json.load(handle)
    unknown = set(config) - set(parser_defaults)
    if unknown:
        raise DomainError(f"unknown config keys {sorted(unknown)}")
    for key, value in config.items():
        if getattr(args, key) == parser_defaults[key]:
            setattr(args, key, value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etacert",
        description=(
            "Device-independent bounds on minimum detector efficiency from an "
            "observed Bell-violation magnitude."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def finalize(sp: argparse.ArgumentParser) -> None:
        sp.set_defaults(
            _defaults={
                a.dest: a.default for a in sp._actions if a.dest not in ("help", "_defaults")
            }
        )

    point = sub.add_parser("point", help="bounds for one observed violation")
    point.add_argument("--e", type=float, required=True, help="observed violation")
    point.add_argument("--xi", type=float, default=0.0, help="dark-count rate")
    point.add_argument("--tol", type=float, default=1e-7, help="bisection tolerance")
    point.add_argument("--level", default="2", choices=("1", "1+AB", "2"))
    point.add_argument("--restarts", type=int, default=32)
    point.add_argument("--seed", type=int, default=0)
    point.add_argument("--out", default=None)
    point.add_argument("--format", default="text", choices=("text", "json"))
    point.add_argument("--config", default=None)
    point.set_defaults(func=cmd_point)
    finalize(point)

    sweep = sub.add_parser("sweep", help="bound curves over a violation grid")
    sweep.add_argument("--e-min", type=float, default=_DEFAULT_GRID[0])
    sweep.add_argument("--e-max", type=float, default=_DEFAULT_GRID[1])
    sweep.add_argument("--points", type=int, default=_DEFAULT_GRID[2])
    sweep.add_argument("--xi", type=float, default=0.0)
    sweep.add_argument("--levels", default="2", help="comma list from 1,1+AB,2")
    sweep.add_argument(
        "--outputs", default="qr,npa,analytic", help="comma list from qr,npa,analytic"
    )
    sweep.add_argument("--tol", type=float, default=1e-7)
    sweep.add_argument("--restarts", type=int, default=32)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--format", default="csv", choices=("csv", "json"))
    sweep.add_argument(
        "--plot",
        nargs="?",
        const="auto",
        default=None,
        help="render the curves to this file (default: alongside --out)",
    )
    sweep.add_argument("--config", default=None)
    sweep.set_defaults(func=cmd_sweep)
    finalize(sweep)

    validate = sub.add_parser("validate", help="run a property suite")
    validate.add_argument("suite", choices=validation.SUITE_NAMES + ("all",))
    validate.add_argument("--seed", type=int, default=None)
    validate.add_argument("--out", default=None)
    validate.add_argument("--format", default="text", choices=("text", "json"))
    validate.set_defaults(func=cmd_validate)
    finalize(validate)

    export = sub.add_parser("export-sdp", help="emit the SDP interchange JSON")
    export.add_argument("--eta", type=float, required=True)
    export.add_argument("--xi", type=float, default=0.0)
    export.add_argument("--level", default="2", choices=("1", "1+AB", "2"))
    export.add_argument("--out", default=None)
    export.set_defaults(func=cmd_export_sdp)
    finalize(export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "config"):
            _apply_config(args, args._defaults)
        return args.func(args)
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
