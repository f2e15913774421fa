"""Candidate order quantities and confidence bounds on their costs.

Given an exact interval ``[lb, ub]`` for the demand parameter, the candidate
quantities are those that are optimal for some parameter inside it. Because
the optimal quantity is monotone in the parameter, the two interval ends are
enough to delimit them. For every candidate ``Q`` the cost bounds are the
extrema of ``G_Q(theta)`` over the interval: ``G_Q`` is convex in the
parameter for binomial and Poisson demand and unimodal for exponential
demand, so the minimum comes from a golden-section search and the maximum is
attained at an end of the interval.

The batched helpers (``candidate_bounds``, ``cost_intervals``,
``global_cost_bounds``) work on arrays of intervals at once and back both the
single-sample solvers and the Monte-Carlo studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import confint
from .confint import ParamInterval, SampleSet
from .errors import DomainError
from .nvcore import (
    Binomial,
    CostParams,
    DemandFamily,
    Exponential,
    Poisson,
    cost_in_parameter,
    optimal_q,
)

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
XTOL = 1e-10
ENUMERATION_CAP = 1_000_000
# Pairs of (Q, interval) line-searched together.
_PAIR_CHUNK = 20_000


def golden_section_min(f, a, b, xtol=XTOL):
    """Elementwise golden-section minimization of a unimodal ``f`` on [a, b].

    ``f`` maps an array of abscissae (same shape as ``a``) to values. Returns
    ``(argmin, minimum)``; both interval ends are compared against the
    interior estimate so minima sitting on the boundary are found exactly.
    """
    a = np.array(a, dtype=float, ndmin=1)
    b = np.array(b, dtype=float, ndmin=1)
    fa, fb = f(a), f(b)
    width = b - a
    span = float(np.max(width)) if width.size else 0.0
    if span > xtol:
        n = int(math.ceil(math.log(xtol / span) / math.log(INVPHI)))
        lo, hi = a.copy(), b.copy()
        c = hi - INVPHI * (hi - lo)
        d = lo + INVPHI * (hi - lo)
        fc, fd = f(c), f(d)
        for _ in range(n):
            left = fc < fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            keep = np.where(left, c, d)
            fkeep = np.where(left, fc, fd)
            new = np.where(left, hi - INVPHI * (hi - lo), lo + INVPHI * (hi - lo))
            fnew = f(new)
            c = np.where(left, new, keep)
            d = np.where(left, keep, new)
            fc = np.where(left, fnew, fkeep)
            fd = np.where(left, fkeep, fnew)
        x = np.where(fc < fd, c, d)
        fx = np.minimum(fc, fd)
    else:
        x = 0.5 * (a + b)
        fx = f(x)
    best_x = np.where(fa <= fx, a, x)
    best_f = np.minimum(fa, fx)
    best_x = np.where(fb < best_f, b, best_x)
    best_f = np.minimum(fb, best_f)
    return best_x, best_f


def _cost_fn(family, cost):
    def g(Q, theta):
        return np.asarray(cost_in_parameter(family, Q, theta, cost), float)

    return g


def cost_intervals(family: DemandFamily, Q, lb, ub, cost: CostParams):
    """Per-quantity cost bounds (min, max of G_Q over [lb, ub]), elementwise.

    ``Q``, ``lb`` and ``ub`` broadcast together. Returns ``(lower, upper,
    argmin)`` arrays.
    """
    Q, lb, ub = np.broadcast_arrays(
        np.asarray(Q, float), np.asarray(lb, float), np.asarray(ub, float)
    )
    shape = Q.shape
    Q, lb, ub = Q.ravel(), lb.ravel(), ub.ravel()
    if np.any(lb > ub):
        raise DomainError("parameter interval bounds out of order")
    g = _cost_fn(family, cost)
    lower = np.empty(Q.shape)
    upper = np.empty(Q.shape)
    argmin = np.empty(Q.shape)
    for start in range(0, Q.size, _PAIR_CHUNK):
        sl = slice(start, start + _PAIR_CHUNK)
        q_chunk = Q[sl]
        x, fx = golden_section_min(lambda t: g(q_chunk, t), lb[sl], ub[sl])
        lower[sl] = fx
        argmin[sl] = x
        upper[sl] = np.maximum(g(q_chunk, lb[sl]), g(q_chunk, ub[sl]))
    return lower.reshape(shape), upper.reshape(shape), argmin.reshape(shape)


def cost_interval_for_q(
    family: DemandFamily, interval: ParamInterval, Q, cost: CostParams
) -> tuple[float, float]:
    """Bounds on the expected cost of ordering ``Q`` while theta is in ``interval``."""
    lower, upper, _ = cost_intervals(family, Q, interval.lb, interval.ub, cost)
    return float(lower), float(upper)


def candidate_bounds(family: DemandFamily, lb, ub, cost: CostParams):
    """Smallest and largest optimal order quantity over the parameter interval.

    The optimal quantity increases with q and with a Poisson rate, but
    decreases with an exponential rate, so the ends swap for exponential
    demand.
    """
    if isinstance(family, Exponential):
        return optimal_q(family, ub, cost), optimal_q(family, lb, cost)
    return optimal_q(family, lb, cost), optimal_q(family, ub, cost)


def global_cost_bounds(family: DemandFamily, lb, ub, cost: CostParams):
    """(c_lb, c_ub) for many intervals at once.

    Exponential demand uses the closed-form corner rule: the lower bound is
    G at (Q_lb, lambda_ub) and the upper bound is the larger of G at
    (Q_lb, lambda_lb) and (Q_ub, lambda_ub). Discrete demand enumerates the
    candidates of every interval and reduces their per-quantity bounds.
    """
    lb = np.atleast_1d(np.asarray(lb, float))
    ub = np.atleast_1d(np.asarray(ub, float))
    q_lo, q_hi = candidate_bounds(family, lb, ub, cost)
    q_lo, q_hi = np.atleast_1d(q_lo), np.atleast_1d(q_hi)
    g = _cost_fn(family, cost)
    if isinstance(family, Exponential):
        c_lb = g(q_lo, ub)
        c_ub = np.maximum(g(q_lo, lb), g(q_hi, ub))
        return q_lo, q_hi, c_lb, c_ub
    q_lo = q_lo.astype(np.int64)
    q_hi = q_hi.astype(np.int64)
    counts = q_hi - q_lo + 1
    owner = np.repeat(np.arange(lb.size), counts)
    offsets = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
    Q = q_lo[owner] + offsets
    lower, upper, _ = cost_intervals(family, Q, lb[owner], ub[owner], cost)
    starts = np.cumsum(counts) - counts
    c_lb = np.minimum.reduceat(lower, starts)
    c_ub = np.maximum.reduceat(upper, starts)
    return q_lo, q_hi, c_lb, c_ub


class QuantityBound(NamedTuple):
    Q: float
    lower: float
    upper: float
    argmin: float


@dataclass(frozen=True)
class IntervalSolution:
    """Candidate order quantities and exact-confidence cost bounds.

    For discrete demand ``per_quantity`` lists every candidate with its cost
    interval. For exponential demand the candidates form the real range
    ``[q_lb, q_ub]`` and ``per_quantity`` is empty; use ``bound_for`` for any
    quantity of interest.
    """

    family: DemandFamily
    interval: ParamInterval
    cost: CostParams
    q_lb: float
    q_ub: float
    c_lb: float
    c_ub: float
    per_quantity: tuple[QuantityBound, ...] = ()

    @property
    def alpha(self) -> float:
        return self.interval.alpha

    @property
    def candidates(self):
        if self.family.discrete:
            return range(int(self.q_lb), int(self.q_ub) + 1)
        return (self.q_lb, self.q_ub)

    def bound_for(self, Q) -> QuantityBound:
        if self.family.discrete:
            for row in self.per_quantity:
                if row.Q == Q:
                    return row
        lower, upper, argmin = cost_intervals(
            self.family, Q, self.interval.lb, self.interval.ub, self.cost
        )
        return QuantityBound(float(Q), float(lower), float(upper), float(argmin))

    def most_conservative(self) -> Optional[QuantityBound]:
        """Candidate with the smallest upper cost bound."""
        if not self.per_quantity:
            return None
        return min(self.per_quantity, key=lambda row: row.upper)


def solve_interval(
    family: DemandFamily, interval: ParamInterval, cost: CostParams
) -> IntervalSolution:
    """Map a parameter interval to candidate quantities and cost bounds."""
    q_lo, q_hi = candidate_bounds(family, interval.lb, interval.ub, cost)
    if isinstance(family, Exponential):
        _, _, c_lb, c_ub = global_cost_bounds(family, interval.lb, interval.ub, cost)
        return IntervalSolution(
            family, interval, cost, float(q_lo), float(q_hi), float(c_lb[0]), float(c_ub[0])
        )
    q_lo, q_hi = int(q_lo), int(q_hi)
    if q_hi - q_lo > ENUMERATION_CAP:
        _, _, c_lb, c_ub = global_cost_bounds(family, interval.lb, interval.ub, cost)
        return IntervalSolution(
            family, interval, cost, q_lo, q_hi, float(c_lb[0]), float(c_ub[0])
        )
    Q = np.arange(q_lo, q_hi + 1)
    lower, upper, argmin = cost_intervals(family, Q, interval.lb, interval.ub, cost)
    rows = tuple(
        QuantityBound(int(q), float(lo), float(hi), float(x))
        for q, lo, hi, x in zip(Q, lower, upper, argmin)
    )
    return IntervalSolution(
        family,
        interval,
        cost,
        q_lo,
        q_hi,
        float(lower.min()),
        float(upper.max()),
        rows,
    )


def solve_binomial(samples: SampleSet, N: int, cost: CostParams, alpha: float):
    """Candidate set and cost bounds for binomial demand with N customers."""
    family = Binomial(N)
    return solve_interval(family, confint.clopper_pearson(samples, N, alpha), cost)


def solve_poisson(samples: SampleSet, cost: CostParams, alpha: float):
    return solve_interval(Poisson(), confint.garwood(samples, alpha), cost)


def solve_exponential(samples: SampleSet, cost: CostParams, alpha: float):
    return solve_interval(Exponential(), confint.exponential_interval(samples, alpha), cost)


def solve(family: DemandFamily, samples: SampleSet, cost: CostParams, alpha: float):
    if isinstance(family, Binomial):
        return solve_binomial(samples, family.N, cost, alpha)
    if isinstance(family, Poisson):
        return solve_poisson(samples, cost, alpha)
    return solve_exponential(samples, cost, alpha)


def emit_cost_surface(
    family: DemandFamily,
    interval: ParamInterval,
    q_range: tuple[float, float],
    cost: CostParams,
    n_theta: int,
    n_q: int,
) -> np.ndarray:
    """Grid of expected costs over parameter x order quantity.

    Returns an ``(rows, 3)`` array of ``(theta, Q, G_Q(theta))`` with theta
    as the outer (ascending) index. Discrete families round the Q-grid to
    distinct integers.
    """
    if n_theta < 2 or n_q < 2:
        raise DomainError("surface grids need at least 2 points per axis")
    thetas = np.linspace(interval.lb, interval.ub, n_theta)
    qs = np.linspace(q_range[0], q_range[1], n_q)
    if family.discrete:
        qs = np.unique(np.round(qs))
    rows = []
    for theta in thetas:
        values = np.asarray(cost_in_parameter(family, qs, theta, cost), float)
        rows.append(np.column_stack([np.full(qs.size, theta), qs, values]))
    return np.vstack(rows)
