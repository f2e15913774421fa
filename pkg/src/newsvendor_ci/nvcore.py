"""Newsvendor costs and optimal order quantities for a known demand law.

The expected total cost of ordering ``Q`` units against demand ``d`` is
``G(Q) = E[h (Q - d)^+ + p (d - Q)^+]``. For the discrete families it is
evaluated in complementary-cdf form

    G(Q) = h (Q - E[d]) + (h + p) * sum_{i >= Q} Pr{d > i}

and for exponential demand in closed form. ``expected_cost`` and
``cost_in_parameter`` broadcast over Q and the demand parameter, which is
what the engine's batched line searches rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import specfun
from .errors import DomainError

# Upper bound on the number of pmf cells materialized per chunk.
_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class CostParams:
    """Unit overage cost ``h`` and unit underage cost ``p``."""

    h: float
    p: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError(f"overage cost h must be > 0, got {self.h!r}")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise DomainError(f"underage cost p must be > 0, got {self.p!r}")

    @property
    def beta(self) -> float:
        """Critical fractile p / (p + h)."""
        return self.p / (self.p + self.h)


@dataclass(frozen=True)
class Binomial:
    N: int
    name = "binomial"
    discrete = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"binomial N must be an integer >= 1, got {self.N!r}")

    def check_parameter(self, q):
        specfun.check_probability(q, "q")

    def mean(self, q):
        return self.N * np.asarray(q, float)


@dataclass(frozen=True)
class Poisson:
    name = "poisson"
    discrete = True

    def check_parameter(self, lam):
        # lambda = 0 is the degenerate law at zero demand
        specfun.check_rate(lam, "lambda", allow_zero=True)

    def mean(self, lam):
        return np.asarray(lam, float)


@dataclass(frozen=True)
class Exponential:
    name = "exponential"
    discrete = False

    def check_parameter(self, lam):
        specfun.check_rate(lam, "lambda")

    def mean(self, lam):
        return 1.0 / np.asarray(lam, float)


DemandFamily = Union[Binomial, Poisson, Exponential]


def family_from_name(name: str, N: int | None = None) -> DemandFamily:
    name = name.lower()
    if name == "binomial":
        if N is None:
            raise DomainError("binomial demand needs the number of customers N")
        return Binomial(int(N))
    if name == "poisson":
        return Poisson()
    if name == "exponential":
        return Exponential()
    raise DomainError(f"unknown demand family {name!r}")


def _unwrap(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def _check_quantity(family, Q):
    Q = np.asarray(Q, dtype=float)
    if np.any(Q < 0) or not np.all(np.isfinite(Q)):
        raise DomainError("order quantity must be finite and >= 0")
    if family.discrete and np.any(Q != np.round(Q)):
        raise DomainError(f"{family.name} order quantities must be integers")
    return Q


def optimal_q(family: DemandFamily, theta, cost: CostParams):
    """Cost-minimizing order quantity when the demand parameter is known.

    Discrete families return ``min{Q : F(Q) >= beta}``; exponential demand
    returns ``ln((h + p) / h) / lambda``.
    """
    family.check_parameter(theta)
    if isinstance(family, Binomial):
        return specfun.binomial_quantile(cost.beta, family.N, theta)
    if isinstance(family, Poisson):
        return specfun.poisson_quantile(cost.beta, theta)
    return _unwrap(math.log((cost.h + cost.p) / cost.h) / np.asarray(theta, float))


def _cost_from_pmf(pmf, Q, mean, cost):
    """G(Q) for pmf rows over 0..K, Q and mean broadcast per row.

    Two exact forms are available:
        h (Q - m) + (h + p) sum_{i >= Q} Pr{d > i}
        p (m - Q) + (h + p) sum_{i < Q} Pr{d <= i}
    The first sums upper-tail probabilities, the second lower-tail ones. Each
    cell uses the form whose summands are small, which keeps the rounding
    error proportional to the cost rather than to the mean demand.
    """
    i = np.arange(pmf.shape[-1])
    cdf = np.cumsum(pmf, axis=-1)
    rev = np.cumsum(pmf[..., ::-1], axis=-1)[..., ::-1]
    sf = np.zeros_like(pmf)
    sf[..., :-1] = rev[..., 1:]
    Qc = Q[..., None]
    tail = np.sum(np.where(i >= Qc, sf, 0.0), axis=-1)
    head = np.sum(np.where(i < Qc, cdf, 0.0), axis=-1)
    upper = cost.h * (Q - mean) + (cost.h + cost.p) * tail
    lower = cost.p * (mean - Q) + (cost.h + cost.p) * head
    return np.where(Q <= mean, lower, upper)


def _discrete_cost(family, theta, Q, cost):
    theta, Q = np.broadcast_arrays(np.asarray(theta, float), np.asarray(Q, float))
    shape = theta.shape
    theta, Q = theta.ravel(), Q.ravel()
    out = np.empty(theta.shape)
    if isinstance(family, Binomial):
        K = family.N
    else:
        K = int(np.max(specfun.poisson_support_bound(theta))) if theta.size else 0
    k = np.arange(K + 1)
    step = max(1, _CHUNK_CELLS // (K + 1))
    for start in range(0, theta.size, step):
        sl = slice(start, start + step)
        t = theta[sl]
        if isinstance(family, Binomial):
            pmf = specfun.binomial_pmf(k, family.N, t[:, None])
        else:
            pmf = specfun.poisson_pmf(k, t[:, None])
        out[sl] = _cost_from_pmf(np.atleast_2d(pmf), Q[sl], family.mean(t), cost)
    return out.reshape(shape)


def _exponential_cost(theta, Q, cost):
    lam = np.asarray(theta, float)
    Q = np.asarray(Q, float)
    a = cost.h / (cost.h + cost.p)
    return (cost.h + cost.p) / lam * (a * (lam * Q - 1.0) + np.exp(-lam * Q))


def expected_cost(family: DemandFamily, theta, Q, cost: CostParams):
    """Expected total cost G(Q) for demand parameter ``theta``."""
    family.check_parameter(theta)
    Q = _check_quantity(family, Q)
    if family.discrete:
        return _unwrap(_discrete_cost(family, theta, Q, cost))
    return _unwrap(_exponential_cost(theta, Q, cost))


def cost_in_parameter(family: DemandFamily, Q, theta, cost: CostParams):
    """G_Q(theta): the expected cost with the order quantity held fixed."""
    return expected_cost(family, theta, Q, cost)


def forward_difference(family: DemandFamily, theta, Q, cost: CostParams):
    """G(Q + 1) - G(Q) = h - (h + p) Pr{d > Q} for discrete demand."""
    if not family.discrete:
        raise DomainError("forward differences are defined for discrete demand only")
    family.check_parameter(theta)
    Q = _check_quantity(family, Q)
    if isinstance(family, Binomial):
        Qc = np.minimum(Q, family.N)
        sf = specfun.binomial_sf(Qc.astype(np.int64), family.N, theta)
    else:
        sf = specfun.poisson_sf(Q.astype(np.int64), theta)
    return _unwrap(cost.h - (cost.h + cost.p) * np.asarray(sf))


# ---------------------------------------------------------------------------
# arbitrary discrete laws (used for posterior-predictive pricing)


def pmf_quantile(pmf, beta: float) -> int:
    """Smallest index Q with sum(pmf[:Q + 1]) >= beta."""
    cdf = np.cumsum(pmf)
    hits = np.flatnonzero(cdf >= beta)
    if hits.size == 0:
        raise DomainError("pmf does not reach the requested level; support too short")
    return int(hits[0])


def pmf_expected_cost(pmf, Q, cost: CostParams):
    """G(Q) for a demand with mass ``pmf[k]`` at k = 0..len(pmf) - 1."""
    pmf = np.asarray(pmf, float)
    Q = np.asarray(Q, float)
    mean = float(np.dot(np.arange(pmf.size), pmf))
    flat = np.atleast_1d(Q).ravel()
    out = _cost_from_pmf(pmf[None, :], flat, mean, cost)
    return _unwrap(out.reshape(Q.shape))
