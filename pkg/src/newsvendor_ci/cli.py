"""Command-line front end.

    newsvendor-ci solve    --family binomial --n 50 --input demands.txt
    newsvendor-ci baseline --family poisson --input demands.txt
    newsvendor-ci fixture  binomial_4_4
    newsvendor-ci coverage --family exponential --theta 0.02 --seed 7
    newsvendor-ci surface  exponential_6_3 --out surface.csv

Exit status is 0 on success, 2 on invalid input and 1 on internal errors or
failed fixture comparisons. ``NEWSVENDOR_CI_FORMAT`` sets the default output
format.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import baselines, engine, experiments
from .confint import SampleSet
from .errors import DataError
from .nvcore import CostParams, family_from_name

FORMAT_ENV = "NEWSVENDOR_CI_FORMAT"
FORMATS = ("text", "json", "csv")


class UsageError(Exception):
    """Bad command line; argparse already printed usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    family: Optional[str] = None
    N: Optional[int] = None
    h: float = 1.0
    p: float = 3.0
    alpha: float = 0.9
    input: Optional[Path] = None
    censored: Optional[Path] = None
    format: str = "text"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DataError(f"--alpha must lie in (0, 1), got {self.alpha}")
        if not (self.h > 0 and self.p > 0):
            raise DataError("--h and --p must be > 0")
        if self.family == "binomial" and (self.N is None or self.N < 1):
            raise DataError("binomial demand needs --n >= 1")
        if self.format not in FORMATS:
            raise DataError(f"--format must be one of {FORMATS}")

    @property
    def cost(self) -> CostParams:
        return CostParams(self.h, self.p)


def _read_lines(path):
    try:
        return Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _parse_columns(path):
    rows = []
    for lineno, raw in enumerate(_read_lines(path), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f for f in line.replace(",", " ").split() if f]
        if len(fields) > 2:
            raise DataError(f"{path}:{lineno}: expected at most two columns, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise DataError(f"{path}:{lineno}: not a number: {raw.strip()!r}") from None
        if values[0] < 0:
            raise DataError(f"{path}:{lineno}: negative demand {values[0]:g}")
        rows.append((lineno, values))
    if not rows:
        raise DataError(f"{path}: no demand observations (need at least one)")
    return rows


def parse_samples(path, censored=None) -> SampleSet:
    """Read one demand per line, with optional censoring metadata.

    A second column (comma or whitespace separated) holds the number of
    customers seen while stock lasted or the in-stock fraction of the period.
    ``censored`` names a separate file with that column instead.
    """
    rows = _parse_columns(path)
    demands = [v[0] for _, v in rows]
    widths = {len(v) for _, v in rows}
    if widths == {2}:
        meta = [v[1] for _, v in rows]
    elif widths == {1}:
        meta = None
    else:
        first = next(n for n, v in rows if len(v) != len(rows[0][1]))
        raise DataError(f"{path}:{first}: inconsistent number of columns")
    if censored is not None:
        if meta is not None:
            raise DataError("censoring given both inline and with --censored")
        extra = _parse_columns(censored)
        if any(len(v) != 1 for _, v in extra):
            raise DataError(f"{censored}: expected one value per line")
        meta = [v[0] for _, v in extra]
    if meta is not None:
        for (lineno, v), m in zip(rows, meta):
            if m <= 0:
                raise DataError(f"{path}:{lineno}: censoring value must be > 0")
    return SampleSet(np.array(demands), None if meta is None else np.array(meta))


# ---------------------------------------------------------------------------
# report builders; each returns a JSON-ready dict


def _num(x):
    return int(x) if isinstance(x, (int, np.integer)) else float(x)


def solve_report(config: RunConfig, samples: SampleSet) -> dict:
    family = family_from_name(config.family, config.N)
    sol = engine.solve(family, samples, config.cost, config.alpha)
    out = {
        "family": family.name,
        "alpha": config.alpha,
        "interval": [sol.interval.lb, sol.interval.ub],
        "candidates": [_num(sol.q_lb), _num(sol.q_ub)],
        "cost_bounds": [sol.c_lb, sol.c_ub],
        "per_quantity": [
            {"Q": _num(r.Q), "lower": r.lower, "upper": r.upper} for r in sol.per_quantity
        ],
    }
    best = sol.most_conservative()
    if best is not None:
        out["lowest_upper_bound_q"] = _num(best.Q)
    return out


def baseline_report(config: RunConfig, samples: SampleSet) -> dict:
    family = family_from_name(config.family, config.N)
    sol = engine.solve(family, samples, config.cost, config.alpha)
    recs = [
        baselines.mle_policy(family, samples, config.cost),
        baselines.hill_policy(family, samples, config.cost),
    ]
    out = {"family": family.name, "alpha": config.alpha, "recommendations": []}
    for rec in recs:
        bound = sol.bound_for(rec.quantity)
        out["recommendations"].append(
            {
                "method": rec.method,
                "quantity": _num(rec.quantity),
                "estimated_cost": rec.estimated_cost,
                "cost_interval": [bound.lower, bound.upper],
            }
        )
    return out


def _text_solve(r):
    lo, hi = r["candidates"]
    discrete = r["family"] != "exponential"
    lines = [
        f"family: {r['family']}  alpha: {r['alpha']:.4f}",
        f"parameter interval: ({r['interval'][0]:.4f}, {r['interval'][1]:.4f})",
        (
            "candidate quantities: {" + ", ".join(str(q) for q in range(lo, hi + 1)) + "}"
            if discrete
            else f"candidate quantities: [{lo:.4f}, {hi:.4f}]"
        ),
        f"cost interval: ({r['cost_bounds'][0]:.4f}, {r['cost_bounds'][1]:.4f})",
    ]
    for row in r["per_quantity"]:
        lines.append(f"  Q={row['Q']}: ({row['lower']:.4f}, {row['upper']:.4f})")
    if "lowest_upper_bound_q" in r:
        lines.append(f"lowest upper cost bound at Q={r['lowest_upper_bound_q']}")
    return "\n".join(lines)


def _fmt_q(q):
    return str(q) if isinstance(q, int) else f"{q:.4f}"


def _text_baseline(r):
    lines = [f"family: {r['family']}  alpha: {r['alpha']:.4f}"]
    for rec in r["recommendations"]:
        lo, hi = rec["cost_interval"]
        lines.append(
            f"{rec['method']}: {_fmt_q(rec['quantity'])} @ {rec['estimated_cost']:.4f} "
            f"with interval ({lo:.4f}, {hi:.4f})"
        )
    return "\n".join(lines)


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().rstrip("\n")


def _csv_solve(r):
    return _csv(("Q", "lower", "upper"), [(x["Q"], repr(x["lower"]), repr(x["upper"])) for x in r["per_quantity"]])


def _csv_baseline(r):
    return _csv(
        ("method", "quantity", "estimated_cost", "lower", "upper"),
        [
            (x["method"], x["quantity"], repr(x["estimated_cost"]), *map(repr, x["cost_interval"]))
            for x in r["recommendations"]
        ],
    )


def _emit(report: dict, fmt: str, text, table):
    if fmt == "json":
        print(json.dumps(report, indent=2))
    elif fmt == "csv":
        print(table(report))
    else:
        print(text(report))


def _emit_experiment(report: experiments.ExperimentReport, fmt):
    if fmt == "json":
        print(report.to_json())
    elif fmt == "csv":
        print(_csv(("metric", "value"), [(k, repr(v)) for k, v in report.metrics.items()]))
    else:
        print(report.to_text())


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="newsvendor-ci", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    default_fmt = os.environ.get(FORMAT_ENV, "text")

    def common(p):
        p.add_argument("--format", choices=FORMATS, default=default_fmt)

    def model(p):
        p.add_argument("--family", required=True, choices=("binomial", "poisson", "exponential"))
        p.add_argument("--n", type=int, help="customers per period (binomial)")
        p.add_argument("--h", type=float, default=1.0, help="overage cost per unit")
        p.add_argument("--p", type=float, default=3.0, help="underage cost per unit")
        p.add_argument("--alpha", type=float, default=0.9, help="confidence level")

    for name in ("solve", "baseline"):
        p = sub.add_parser(name)
        model(p)
        p.add_argument("--input", required=True, type=Path, help="demand file")
        p.add_argument("--censored", type=Path, help="censoring metadata, one value per line")
        common(p)

    p = sub.add_parser("fixture", help="rerun a worked example and compare")
    p.add_argument("name", choices=sorted(experiments.FIXTURES))
    common(p)

    p = sub.add_parser("coverage", help="Monte-Carlo coverage study")
    model(p)
    p.add_argument("--theta", type=float, required=True, help="true parameter")
    p.add_argument("--m", type=int, default=10, help="samples per replication")
    p.add_argument("--replications", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    common(p)

    p = sub.add_parser("neyman", help="posterior-predictive averaging demonstration")
    p.add_argument("--replications", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--bounds", default="closed",
                   choices=("open", "closed", "left-open", "right-open"))
    p.add_argument("--workers", type=int, default=1)
    common(p)

    p = sub.add_parser("surface", help="write a fixture's cost surface as CSV")
    p.add_argument("name", choices=sorted(experiments.FIXTURES))
    p.add_argument("--n-theta", type=int, default=50)
    p.add_argument("--n-q", type=int, default=50)
    p.add_argument("--out", type=Path, required=True)
    return parser


def run(args) -> int:
    cmd = args.command
    if cmd in ("solve", "baseline"):
        config = RunConfig(cmd, args.family, args.n, args.h, args.p, args.alpha,
                           args.input, args.censored, args.format)
        samples = parse_samples(config.input, config.censored)
        if cmd == "solve":
            _emit(solve_report(config, samples), config.format, _text_solve, _csv_solve)
        else:
            _emit(baseline_report(config, samples), config.format, _text_baseline, _csv_baseline)
        return 0
    if cmd == "fixture":
        report = experiments.run_fixture(args.name)
        _emit_experiment(report, args.format)
        return 0 if report.passed else 1
    if cmd == "coverage":
        config = RunConfig(cmd, args.family, args.n, args.h, args.p, args.alpha,
                           format=args.format, seed=args.seed)
        family = family_from_name(config.family, config.N)
        report = experiments.coverage_study(
            family, args.theta, args.m, config.alpha, args.replications, config.seed,
            config.cost, args.workers,
        )
        _emit_experiment(report, args.format)
        return 0
    if cmd == "neyman":
        report = experiments.neyman_bias_demo(
            args.replications, args.seed, bounds=args.bounds, workers=args.workers
        )
        _emit_experiment(report, args.format)
        return 0
    path = experiments.surface_dump(args.name, args.n_theta, args.n_q, args.out)
    print(path)
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError:
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return run(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
