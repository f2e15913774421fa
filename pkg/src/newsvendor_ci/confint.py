"""Exact two-sided confidence intervals for the unknown demand parameter.

Binomial success probability: Clopper-Pearson, through beta quantiles.
Poisson rate: Garwood, through gamma quantiles.
Exponential rate: the gamma pivot of the sample sum.

All intervals put (1 - alpha) / 2 probability in each tail. Lost sales are
handled by replacing the number of trials (binomial) or the exposure
(Poisson) with the observed totals carried in ``SampleSet.censoring``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import specfun
from .errors import DataError, DomainError


@dataclass(frozen=True)
class SampleSet:
    """Observed demands plus optional per-period censoring metadata.

    ``censoring`` holds the number of customers that visited while stock was
    positive (binomial) or the fraction of the period with positive stock
    (Poisson). ``None`` means demand was fully observed.
    """

    demands: np.ndarray
    censoring: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.demands, dtype=float).ravel()
        if d.size < 1:
            raise DataError("at least one demand observation is required")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise DataError("demand observations must be finite and >= 0")
        object.__setattr__(self, "demands", d)
        if self.censoring is not None:
            c = np.asarray(self.censoring, dtype=float).ravel()
            if c.size != d.size:
                raise DataError(
                    f"censoring metadata has {c.size} entries for {d.size} demands"
                )
            if not np.all(np.isfinite(c)) or np.any(c <= 0):
                raise DataError("censoring metadata must be finite and > 0")
            object.__setattr__(self, "censoring", c)

    @property
    def M(self) -> int:
        return int(self.demands.size)

    @property
    def total(self) -> float:
        return float(self.demands.sum())

    @property
    def censored(self) -> bool:
        return self.censoring is not None

    def require_counts(self):
        if np.any(self.demands != np.round(self.demands)):
            raise DataError("demands must be whole numbers for discrete demand")

    def trials(self, N: int) -> int:
        """Number of Bernoulli trials behind the sample: M N, or sum N_j if censored."""
        self.require_counts()
        if self.censoring is None:
            if np.any(self.demands > N):
                raise DataError(f"a demand exceeds the number of customers N={N}")
            return self.M * int(N)
        if np.any(self.censoring != np.round(self.censoring)):
            raise DataError("customer counts must be whole numbers")
        if np.any(self.demands > self.censoring):
            bad = int(np.flatnonzero(self.demands > self.censoring)[0])
            raise DataError(
                f"demand {self.demands[bad]:g} exceeds its customer count "
                f"{self.censoring[bad]:g} (observation {bad + 1})"
            )
        return int(self.censoring.sum())

    def exposure(self) -> float:
        """Observation time in periods: M, or sum T_j if censored."""
        if self.censoring is None:
            return float(self.M)
        if np.any(self.censoring > 1):
            raise DataError("positive-inventory fractions must lie in (0, 1]")
        return float(self.censoring.sum())


@dataclass(frozen=True)
class ParamInterval:
    lb: float
    ub: float
    alpha: float
    family: str

    def __post_init__(self):
        if not self.lb <= self.ub:
            raise DomainError(f"interval bounds out of order: ({self.lb}, {self.ub})")

    def contains(self, theta) -> bool:
        return bool(self.lb <= theta <= self.ub)

    @property
    def width(self) -> float:
        return self.ub - self.lb


def _check_alpha(alpha):
    specfun.check_probability(alpha, "confidence level alpha", open_interval=True)


# Array-level bound computations. The Monte-Carlo studies call these directly.


def clopper_pearson_bounds(successes, trials, alpha):
    """Beta-quantile form of the Clopper-Pearson interval, elementwise."""
    _check_alpha(alpha)
    X, n = np.broadcast_arrays(np.asarray(successes, float), np.asarray(trials, float))
    if np.any(X < 0) or np.any(X > n):
        raise DataError("number of successes must lie in [0, trials]")
    lo_tail = (1.0 - alpha) / 2.0
    hi_tail = (1.0 + alpha) / 2.0
    lb = np.zeros(X.shape)
    ub = np.ones(X.shape)
    pos = X > 0
    if pos.any():
        lb[pos] = specfun.beta_quantile(lo_tail, X[pos], n[pos] - X[pos] + 1.0)
    short = X < n
    if short.any():
        ub[short] = specfun.beta_quantile(hi_tail, X[short] + 1.0, n[short] - X[short])
    return lb, ub


def garwood_bounds(total, exposure, alpha):
    """Gamma-quantile form of the Garwood interval, elementwise."""
    _check_alpha(alpha)
    d, t = np.broadcast_arrays(np.asarray(total, float), np.asarray(exposure, float))
    if np.any(t <= 0):
        raise DataError("exposure must be > 0")
    if np.any(d < 0):
        raise DataError("total count must be >= 0")
    lb = np.zeros(d.shape)
    pos = d > 0
    if pos.any():
        lb[pos] = specfun.gamma_quantile((1.0 - alpha) / 2.0, d[pos], 1.0 / t[pos])
    ub = np.asarray(specfun.gamma_quantile((1.0 + alpha) / 2.0, d + 1.0, 1.0 / t), float)
    return lb, np.atleast_1d(ub).reshape(d.shape)


def exponential_rate_bounds(M, total, alpha):
    """Gamma(M, 1 / total) quantiles at both tails, elementwise."""
    _check_alpha(alpha)
    M, s = np.broadcast_arrays(np.asarray(M, float), np.asarray(total, float))
    if np.any(s <= 0):
        raise DataError("exponential rate interval needs a positive sample sum")
    lb = specfun.gamma_quantile((1.0 - alpha) / 2.0, M, 1.0 / s)
    ub = specfun.gamma_quantile((1.0 + alpha) / 2.0, M, 1.0 / s)
    return np.asarray(lb, float), np.asarray(ub, float)


# Chi-square forms, kept as the second route to the same intervals.


def garwood_chi2_bounds(total, exposure, alpha):
    lo = 0.0 if total == 0 else specfun.chi2_quantile((1 - alpha) / 2, 2 * total)
    hi = specfun.chi2_quantile((1 + alpha) / 2, 2 * total + 2)
    return float(lo) / (2 * exposure), float(hi) / (2 * exposure)


def exponential_chi2_bounds(M, total, alpha):
    lo = specfun.chi2_quantile((1 - alpha) / 2, 2 * M)
    hi = specfun.chi2_quantile((1 + alpha) / 2, 2 * M)
    return float(lo) / (2 * total), float(hi) / (2 * total)


# Public interval constructors.


def clopper_pearson(
    samples: SampleSet, N: int, alpha: float, method: str = "clopper-pearson"
) -> ParamInterval:
    """Exact interval for the binomial purchase probability q.

    The successes are the summed demands; the trials are ``M * N``, or the
    summed customer counts when the sample carries lost-sales metadata.
    """
    if method == "agresti-coull":
        raise NotImplementedError("approximate binomial intervals are not provided")
    if method != "clopper-pearson":
        raise DomainError(f"unknown binomial interval method {method!r}")
    trials = samples.trials(N)
    lb, ub = clopper_pearson_bounds(samples.total, trials, alpha)
    return ParamInterval(float(lb), float(ub), alpha, "binomial")


def garwood(samples: SampleSet, alpha: float) -> ParamInterval:
    samples.require_counts()
    lb, ub = garwood_bounds(samples.total, samples.exposure(), alpha)
    return ParamInterval(float(lb), float(ub), alpha, "poisson")


def exponential_interval(samples: SampleSet, alpha: float) -> ParamInterval:
    if samples.censored:
        raise DataError("lost-sales adjustment is not available for exponential demand")
    if samples.total <= 0:
        raise DataError("all exponential demand samples are zero; the rate is undefined")
    lb, ub = exponential_rate_bounds(samples.M, samples.total, alpha)
    return ParamInterval(float(lb), float(ub), alpha, "exponential")


def interval_for(family, samples: SampleSet, alpha: float) -> ParamInterval:
    if family.name == "binomial":
        return clopper_pearson(samples, family.N, alpha)
    if family.name == "poisson":
        return garwood(samples, alpha)
    return exponential_interval(samples, alpha)
