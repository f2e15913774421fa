"""Reproduction fixtures and Monte-Carlo studies.

Random streams come from counter-based Philox generators: replication block
``b`` of a study seeded with ``s`` draws from ``Philox(key=s)`` with the
block index in the high counter word. Block contents therefore do not depend
on how blocks are spread over workers, and serial and parallel runs return
identical metrics.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import baselines, confint, engine
from .confint import SampleSet
from .errors import DomainError
from .nvcore import (
    Binomial,
    CostParams,
    DemandFamily,
    Exponential,
    Poisson,
    expected_cost,
    optimal_q,
)

BLOCK_SIZE = 1000
# Slack for comparing line-searched cost bounds with exact true costs.
COST_SLACK = 1e-9
TOL4 = 5e-4
TOL2 = 5e-2
TOL_RATE = 1e-6

# Sample sets printed with the three worked examples.
BINOMIAL_SAMPLES = [28, 28, 24, 27, 25, 26, 28, 28, 23, 27]
POISSON_SAMPLES = [51, 54, 50, 45, 52, 39, 52, 54, 50, 40]
EXPONENTIAL_SAMPLES = [39.79, 39.26, 32.21, 0.51, 107.03, 72.87, 45.23, 20.12, 26.46, 56.80]


@dataclass(frozen=True)
class Fixture:
    name: str
    family: DemandFamily
    samples: SampleSet
    cost: CostParams
    alpha: float
    true_theta: float


FIXTURES = {
    "binomial_4_4": Fixture(
        "binomial_4_4", Binomial(50), SampleSet(BINOMIAL_SAMPLES), CostParams(1, 3), 0.9, 0.5
    ),
    "poisson_5_4": Fixture(
        "poisson_5_4", Poisson(), SampleSet(POISSON_SAMPLES), CostParams(1, 3), 0.9, 50.0
    ),
    "exponential_6_3": Fixture(
        "exponential_6_3",
        Exponential(),
        SampleSet(EXPONENTIAL_SAMPLES),
        CostParams(1, 3),
        0.9,
        1 / 50,
    ),
}


@dataclass
class Comparison:
    metric: str
    expected: Any
    actual: Any
    tolerance: Optional[float]
    passed: bool

    @classmethod
    def check(cls, metric, expected, actual, tolerance=None):
        if tolerance is None:
            passed = expected == actual
        else:
            passed = abs(float(actual) - float(expected)) <= tolerance
        return cls(metric, expected, actual, tolerance, bool(passed))


@dataclass
class ExperimentReport:
    experiment: str
    inputs: dict
    metrics: dict
    replications: int = 0
    seed: Optional[int] = None
    wall_time: float = 0.0
    standard_errors: dict = field(default_factory=dict)
    comparisons: list = field(default_factory=list)

    def __post_init__(self):
        for name, value in self.metrics.items():
            if not math.isfinite(value):
                raise ValueError(f"metric {name} is not finite: {value!r}")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def failures(self):
        return [c for c in self.comparisons if not c.passed]

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [f"experiment: {self.experiment}"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        if self.replications:
            lines.append(f"replications: {self.replications}")
        for name, value in self.metrics.items():
            se = self.standard_errors.get(name)
            if se is None:
                lines.append(f"  {name}: {value:.4f}")
            else:
                lines.append(f"  {name}: {value:.4f} (se {se:.4f})")
        for c in self.comparisons:
            status = "PASS" if c.passed else "FAIL"
            tol = "exact" if c.tolerance is None else f"+/-{c.tolerance:g}"
            lines.append(
                f"  [{status}] {c.metric}: expected {_fmt(c.expected)}, "
                f"got {_fmt(c.actual)} ({tol})"
            )
        lines.append(f"wall time: {self.wall_time:.3f} s")
        return "\n".join(lines)


class FixtureMismatch(AssertionError):
    def __init__(self, report: ExperimentReport):
        self.report = report
        bad = ", ".join(c.metric for c in report.failures())
        super().__init__(f"{report.experiment}: mismatched metrics: {bad}")


def _fmt(value):
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, float):
        return f"{value:.7g}"
    return str(value)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# fixtures


def _binomial_checks(fx, sol, mle, bayes):
    C = Comparison.check
    fam, cost = fx.family, fx.cost
    b29 = sol.bound_for(29)
    return [
        C("candidate_set", list(range(27, 32)), list(sol.candidates)),
        C("c_lb", 4.4268, sol.c_lb, TOL4),
        C("c_ub", 7.2205, sol.c_ub, TOL4),
        C("q29_lower", 4.4487, b29.lower, TOL4),
        C("q29_upper", 4.9528, b29.upper, TOL4),
        C("mle_quantity", 29, mle.quantity),
        C("mle_cost", 4.4614, mle.estimated_cost, TOL4),
        C("bayes_quantity", 29, bayes.quantity),
        C("bayes_cost", 4.6692, bayes.estimated_cost, TOL4),
        C("true_optimal_quantity", 27, int(optimal_q(fam, fx.true_theta, cost))),
        C("true_cost_27", 4.4946, float(expected_cost(fam, fx.true_theta, 27, cost)), TOL4),
        C("true_cost_29", 4.8904, float(expected_cost(fam, fx.true_theta, 29, cost)), TOL4),
    ]


def _poisson_checks(fx, sol, mle, bayes):
    C = Comparison.check
    fam, cost = fx.family, fx.cost
    b53, b54 = sol.bound_for(53), sol.bound_for(54)
    return [
        C("candidate_set", list(range(50, 58)), list(sol.candidates)),
        C("c_lb", 8.6803, sol.c_lb, TOL4),
        C("c_ub", 14.6220, sol.c_ub, TOL4),
        C("q53_lower", 8.9463, b53.lower, TOL4),
        C("q53_upper", 11.0800, b53.upper, TOL4),
        C("q54_lower", 9.0334, b54.lower, TOL4),
        C("q54_upper", 10.3374, b54.upper, TOL4),
        C("mle_rate", 48.7, mle.estimate["theta"]),
        C("mle_quantity", 53, mle.quantity),
        C("mle_cost", 9.0035, mle.estimated_cost, TOL4),
        C("bayes_quantity", 54, bayes.quantity),
        C("bayes_cost", 9.4764, bayes.estimated_cost, TOL4),
        C("true_optimal_quantity", 55, int(optimal_q(fam, fx.true_theta, cost))),
        C("true_cost_55", 9.1222, float(expected_cost(fam, fx.true_theta, 55, cost)), TOL4),
        C("true_cost_53", 9.3693, float(expected_cost(fam, fx.true_theta, 53, cost)), TOL4),
        C("true_cost_54", 9.1530, float(expected_cost(fam, fx.true_theta, 54, cost)), TOL4),
    ]


def _exponential_checks(fx, sol, mle, bayes):
    C = Comparison.check
    fam, cost, lam = fx.family, fx.cost, fx.true_theta
    b61, b59 = sol.bound_for(61.04), sol.bound_for(59.14)
    q_true = float(optimal_q(fam, lam, cost))
    return [
        C("rate_lb", 0.0123211, sol.interval.lb, TOL_RATE),
        C("rate_ub", 0.0356664, sol.interval.ub, TOL_RATE),
        C("q_lb", 38.86, sol.q_lb, TOL2),
        C("q_ub", 112.51, sol.q_ub, TOL2),
        C("c_lb", 38.86, sol.c_lb, TOL2),
        C("c_ub", 158.81, sol.c_ub, TOL2),
        C("mle_rate", 0.0227099, mle.estimate["theta"], TOL_RATE),
        C("mle_quantity", 61.04, mle.quantity, TOL2),
        C("mle_cost", 61.04, mle.estimated_cost, TOL2),
        C("true_cost_at_mle_quantity", 70.03, float(expected_cost(fam, lam, mle.quantity, cost)), TOL2),
        C("q61.04_lower", 45.71, b61.lower, TOL2),
        C("q61.04_upper", 132.90, b61.upper, TOL2),
        C("bayes_quantity", 59.14, bayes.quantity, TOL2),
        C("bayes_cost", 65.05, bayes.estimated_cost, TOL2),
        C("q59.14_lower", 44.71, b59.lower, TOL2),
        C("q59.14_upper", 134.63, b59.upper, TOL2),
        C("true_cost_59.14", 70.42, float(expected_cost(fam, lam, 59.14, cost)), TOL2),
        C("true_optimal_quantity", 69.31, q_true, TOL2),
        C("true_optimal_cost", 69.31, float(expected_cost(fam, lam, q_true, cost)), TOL2),
    ]


_CHECKS = {
    "binomial_4_4": _binomial_checks,
    "poisson_5_4": _poisson_checks,
    "exponential_6_3": _exponential_checks,
}


def run_fixture(name: str, raise_on_failure: bool = False, prior=None) -> ExperimentReport:
    """Run a worked example end to end and compare with the printed numbers."""
    if name not in FIXTURES:
        raise DomainError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    fx = FIXTURES[name]
    start = time.perf_counter()
    sol = engine.solve(fx.family, fx.samples, fx.cost, fx.alpha)
    mle = baselines.mle_policy(fx.family, fx.samples, fx.cost)
    bayes = baselines.hill_policy(fx.family, fx.samples, fx.cost, prior)
    comparisons = _CHECKS[name](fx, sol, mle, bayes)
    elapsed = time.perf_counter() - start
    metrics = {
        "interval_lb": sol.interval.lb,
        "interval_ub": sol.interval.ub,
        "q_lb": float(sol.q_lb),
        "q_ub": float(sol.q_ub),
        "c_lb": sol.c_lb,
        "c_ub": sol.c_ub,
        "mle_quantity": float(mle.quantity),
        "mle_cost": mle.estimated_cost,
        "bayes_quantity": float(bayes.quantity),
        "bayes_cost": bayes.estimated_cost,
    }
    report = ExperimentReport(
        experiment=name,
        inputs={
            "family": fx.family.name,
            "samples": fx.samples.demands.tolist(),
            "h": fx.cost.h,
            "p": fx.cost.p,
            "alpha": fx.alpha,
        },
        metrics=metrics,
        wall_time=elapsed,
        comparisons=comparisons,
    )
    if raise_on_failure and not report.passed:
        raise FixtureMismatch(report)
    return report


def calibrate_hill_prior() -> dict:
    """Try each candidate prior on the three Bayes fixtures, in order.

    Returns per-prior residuals and the first prior that reproduces every
    printed (quantity, cost) pair, or ``None`` if none does.
    """
    results = {}
    selected = None
    for prior in baselines.PRIORS:
        rows = {}
        for name, fx in FIXTURES.items():
            rec = baselines.hill_policy(fx.family, fx.samples, fx.cost, prior)
            checks = [
                c
                for c in _CHECKS[name](
                    fx,
                    engine.solve(fx.family, fx.samples, fx.cost, fx.alpha),
                    baselines.mle_policy(fx.family, fx.samples, fx.cost),
                    rec,
                )
                if c.metric in ("bayes_quantity", "bayes_cost")
            ]
            rows[name] = {
                "quantity": rec.quantity,
                "cost": rec.estimated_cost,
                "residuals": {
                    c.metric: float(c.actual) - float(c.expected) for c in checks
                },
                "passed": all(c.passed for c in checks),
            }
        results[prior] = rows
        if selected is None and all(r["passed"] for r in rows.values()):
            selected = prior
    return {"selected": selected, "candidates": results}


# ---------------------------------------------------------------------------
# Monte-Carlo machinery


def block_generator(seed: int, block: int) -> np.random.Generator:
    key = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, block]))


def _blocks(replications):
    n_blocks = -(-replications // BLOCK_SIZE)
    return [
        (b, min(BLOCK_SIZE, replications - b * BLOCK_SIZE)) for b in range(n_blocks)
    ]


def _map_blocks(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _draw(family, theta, size, rng):
    if isinstance(family, Binomial):
        return rng.binomial(family.N, theta, size=size).astype(float)
    if isinstance(family, Poisson):
        return rng.poisson(theta, size=size).astype(float)
    return rng.exponential(1.0 / theta, size=size)


def _intervals_from_totals(family, totals, M, alpha):
    if isinstance(family, Binomial):
        return confint.clopper_pearson_bounds(totals, M * family.N, alpha)
    if isinstance(family, Poisson):
        return confint.garwood_bounds(totals, float(M), alpha)
    return confint.exponential_rate_bounds(M, totals, alpha)


def _range_extrema(values, lo, hi):
    """Min and max of values[lo_i..hi_i] for each i."""
    counts = hi - lo + 1
    idx = np.repeat(lo, counts) + (
        np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    )
    starts = np.cumsum(counts) - counts
    v = values[idx]
    return np.minimum.reduceat(v, starts), np.maximum.reduceat(v, starts)


def _coverage_flags(family, theta, M, alpha, cost, totals):
    """Per-total coverage indicators (parameter, candidate set, cost bounds)."""
    lb, ub = _intervals_from_totals(family, totals, M, alpha)
    q_lo, q_hi, c_lb, c_ub = engine.global_cost_bounds(family, lb, ub, cost)
    q_true = optimal_q(family, theta, cost)
    covers_param = (lb <= theta) & (theta <= ub)
    covers_q = (q_lo <= q_true) & (q_true <= q_hi)
    if family.discrete:
        top = int(q_hi.max())
        true_costs = np.asarray(expected_cost(family, theta, np.arange(top + 1), cost))
        lo_cost, hi_cost = _range_extrema(
            true_costs, q_lo.astype(np.int64), q_hi.astype(np.int64)
        )
    else:
        hi_cost = np.maximum(
            expected_cost(family, theta, q_lo, cost), expected_cost(family, theta, q_hi, cost)
        )
        lo_cost = np.asarray(expected_cost(family, theta, np.clip(q_true, q_lo, q_hi), cost))
    covers_cost = (c_lb <= lo_cost + COST_SLACK) & (hi_cost <= c_ub + COST_SLACK)
    return covers_param, covers_q, covers_cost, ub - lb


def _coverage_block(task):
    family, theta, M, alpha, cost, seed, block, size = task
    rng = block_generator(seed, block)
    totals = _draw(family, theta, (size, M), rng).sum(axis=1)
    if family.discrete:
        # the interval depends on the sample only through its total
        uniq, inverse = np.unique(totals, return_inverse=True)
        flags = [f[inverse] for f in _coverage_flags(family, theta, M, alpha, cost, uniq)]
    else:
        flags = _coverage_flags(family, theta, M, alpha, cost, totals)
    covers_param, covers_q, covers_cost, width = flags
    return {
        "param": int(covers_param.sum()),
        "quantity": int(covers_q.sum()),
        "cost": int(covers_cost.sum()),
        "violations": int((covers_param & ~(covers_q & covers_cost)).sum()),
        "width": float(width.sum()),
        "width_sq": float((width * width).sum()),
        "n": int(size),
    }


def coverage_study(
    family: DemandFamily,
    theta: float,
    M: int,
    alpha: float,
    replications: int,
    seed: int,
    cost: CostParams = CostParams(1, 3),
    workers: int = 1,
) -> ExperimentReport:
    """Empirical coverage of the parameter interval, candidate set and cost bounds.

    ``implication_violation_rate`` is the share of replications whose
    parameter interval covers the true parameter while the candidate set or
    the cost bounds miss; it is zero whenever the implications behind the
    method hold.
    """
    if replications < 1000:
        raise DomainError("coverage studies need at least 1000 replications")
    family.check_parameter(theta)
    start = time.perf_counter()
    tasks = [
        (family, theta, M, alpha, cost, seed, b, size) for b, size in _blocks(replications)
    ]
    parts = _map_blocks(_coverage_block, tasks, workers)
    n = sum(p["n"] for p in parts)
    metrics, errs = {}, {}
    for key, label in (
        ("param", "parameter_coverage"),
        ("quantity", "candidate_coverage"),
        ("cost", "cost_coverage"),
    ):
        rate = sum(p[key] for p in parts) / n
        metrics[label] = rate
        errs[label] = math.sqrt(rate * (1.0 - rate) / n)
    rate = sum(p["violations"] for p in parts) / n
    metrics["implication_violation_rate"] = rate
    errs["implication_violation_rate"] = math.sqrt(rate * (1.0 - rate) / n)
    mean_width = sum(p["width"] for p in parts) / n
    var_width = max(sum(p["width_sq"] for p in parts) / n - mean_width**2, 0.0)
    metrics["mean_interval_width"] = mean_width
    errs["mean_interval_width"] = math.sqrt(var_width / n)
    inputs = {"family": family.name, "theta": theta, "M": M, "alpha": alpha,
              "h": cost.h, "p": cost.p}
    if isinstance(family, Binomial):
        inputs["N"] = family.N
    return ExperimentReport(
        "coverage",
        inputs,
        metrics,
        replications=n,
        seed=seed,
        wall_time=time.perf_counter() - start,
        standard_errors=errs,
    )


def _neyman_block(task):
    N, q, M, d1, d2, bounds, prior, seed, block, size = task
    rng = block_generator(seed, block)
    totals = rng.binomial(N, q, size=(size, M)).sum(axis=1)
    p = baselines.batch_event_probability(totals, M * N, N, d1, d2, bounds, prior)
    return float(p.sum()), float((p * p).sum()), int(size)


def neyman_bias_demo(
    replications: int = 100_000,
    seed: int = 2024,
    N: int = 50,
    q: float = 0.5,
    M: int = 10,
    delta1: int = 26,
    delta2: int = 28,
    bounds: str = "closed",
    prior=None,
    workers: int = 1,
) -> ExperimentReport:
    """Average posterior-predictive event probability over repeated experiments.

    Each experiment observes M binomial demands, builds the Bayesian
    predictive, and records its probability of the event between ``delta1``
    and ``delta2``; the report sets the long-run average against the true
    probability of the same event.
    """
    if replications < 10_000:
        raise DomainError("the demonstration needs at least 10^4 experiments")
    start = time.perf_counter()
    tasks = [
        (N, q, M, delta1, delta2, bounds, prior, seed, b, size)
        for b, size in _blocks(replications)
    ]
    parts = _map_blocks(_neyman_block, tasks, workers)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    true_p = baselines.true_event_probability(N, q, delta1, delta2, bounds)
    return ExperimentReport(
        "neyman_bias",
        {"N": N, "q": q, "M": M, "delta1": delta1, "delta2": delta2, "bounds": bounds},
        {"bayes_mean_probability": mean, "true_probability": true_p,
         "difference": mean - true_p},
        replications=n,
        seed=seed,
        wall_time=time.perf_counter() - start,
        # the true probability is an exact sum, hence a zero standard error
        standard_errors={"bayes_mean_probability": math.sqrt(var / n),
                         "true_probability": 0.0,
                         "difference": math.sqrt(var / n)},
    )


# ---------------------------------------------------------------------------
# cost surface


SURFACE_HEADER = ("theta", "Q", "expected_cost")


def write_surface_csv(rows: np.ndarray, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SURFACE_HEADER)
            for theta, Q, value in rows:
                writer.writerow([repr(float(theta)), repr(float(Q)), repr(float(value))])
    except OSError as exc:
        raise OSError(f"cannot write cost surface to {path}: {exc}") from exc
    return path


def surface_dump(fixture: str, n_theta: int, n_q: int, path) -> Path:
    """Write the fixture's cost surface over interval x candidate range as CSV."""
    if fixture not in FIXTURES:
        raise DomainError(f"unknown fixture {fixture!r}; choose from {sorted(FIXTURES)}")
    fx = FIXTURES[fixture]
    sol = engine.solve(fx.family, fx.samples, fx.cost, fx.alpha)
    rows = engine.emit_cost_surface(
        fx.family, sol.interval, (sol.q_lb, sol.q_ub), fx.cost, n_theta, n_q
    )
    return write_surface_csv(rows, path)
