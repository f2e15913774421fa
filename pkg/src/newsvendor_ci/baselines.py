"""Point-estimate ordering policies used as comparators.

``mle_policy`` plugs the maximum-likelihood estimate of the parameter into
the known-parameter optimizer. ``hill_policy`` replaces the demand law with
its posterior predictive under a conjugate prior and applies the same
critical-fractile rule to it, pricing the choice under that predictive:

* binomial with Beta(a, b) prior on q      -> beta-binomial predictive
* Poisson with Gamma(a, rate b) prior      -> negative-binomial predictive
* exponential with Gamma(a, rate b) prior  -> Lomax predictive

Improper priors are allowed (``b = 0`` for the gamma family, ``a = b = 0``
for the beta family) as long as the posterior is proper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from . import specfun
from .confint import SampleSet
from .errors import DataError, DomainError
from .nvcore import (
    Binomial,
    CostParams,
    DemandFamily,
    Exponential,
    Poisson,
    expected_cost,
    optimal_q,
    pmf_expected_cost,
    pmf_quantile,
)


@dataclass(frozen=True)
class PointRecommendation:
    method: str
    quantity: float
    estimated_cost: float
    estimate: dict

    def __post_init__(self):
        if self.quantity < 0 or self.estimated_cost < 0:
            raise DomainError("recommendation quantity and cost must be >= 0")


@dataclass(frozen=True)
class ConjugatePrior:
    """Beta(a, b) for a binomial q; Gamma(shape a, rate b) for a rate."""

    a: float
    b: float


# Candidate uninformative priors in calibration order.
PRIORS = {
    "uniform": {
        "binomial": ConjugatePrior(1.0, 1.0),
        "poisson": ConjugatePrior(1.0, 0.0),
        "exponential": ConjugatePrior(1.0, 0.0),
    },
    "scale-invariant": {
        "binomial": ConjugatePrior(0.0, 0.0),
        "poisson": ConjugatePrior(0.0, 0.0),
        "exponential": ConjugatePrior(0.0, 0.0),
    },
    "jeffreys": {
        "binomial": ConjugatePrior(0.5, 0.5),
        "poisson": ConjugatePrior(0.5, 0.0),
        "exponential": ConjugatePrior(0.0, 0.0),
    },
}
DEFAULT_PRIOR = "uniform"


def resolve_prior(family: DemandFamily, prior) -> ConjugatePrior:
    if prior is None:
        prior = DEFAULT_PRIOR
    if isinstance(prior, str):
        try:
            return PRIORS[prior][family.name]
        except KeyError:
            raise DomainError(f"unknown prior {prior!r}") from None
    return prior


# ---------------------------------------------------------------------------
# maximum likelihood


def mle_estimate(family: DemandFamily, samples: SampleSet) -> float:
    if isinstance(family, Binomial):
        return samples.total / samples.trials(family.N)
    if isinstance(family, Poisson):
        samples.require_counts()
        return samples.total / samples.exposure()
    if samples.total <= 0:
        raise DataError("all exponential demand samples are zero; the rate is undefined")
    return samples.M / samples.total


def mle_policy(family: DemandFamily, samples: SampleSet, cost: CostParams):
    theta = mle_estimate(family, samples)
    Q = optimal_q(family, theta, cost)
    Q = int(Q) if family.discrete else float(Q)
    return PointRecommendation(
        "MLE", Q, float(expected_cost(family, theta, Q, cost)), {"theta": theta}
    )


# ---------------------------------------------------------------------------
# posterior predictive laws


def beta_binomial_pmf(k, N, a, b):
    """Beta-binomial mass at k for N trials and Beta(a, b) mixing."""
    k, a, b = np.broadcast_arrays(
        np.asarray(k, float), np.asarray(a, float), np.asarray(b, float)
    )
    logc = gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)
    return np.exp(logc + betaln(k + a, N - k + b) - betaln(a, b))


def negative_binomial_pmf(k, shape, rate):
    """Gamma(shape, rate)-mixed Poisson mass at k."""
    k = np.asarray(k, float)
    logp = (
        gammaln(k + shape)
        - gammaln(k + 1.0)
        - gammaln(shape)
        + shape * np.log(rate / (rate + 1.0))
        - k * np.log1p(rate)
    )
    return np.exp(logp)


def _negative_binomial_support(shape, rate):
    mean = shape / rate
    sd = np.sqrt(shape * (rate + 1.0)) / rate
    K = int(np.ceil(mean + 20.0 * sd + 50.0))
    while True:
        pmf = negative_binomial_pmf(np.arange(K + 1), shape, rate)
        # the log-gamma terms leave ~1e-13 of rounding in the total, so the
        # cut is taken relative to the computed mass once the tail is gone
        if K > mean and pmf[-1] < 1e-18:
            cdf = np.cumsum(pmf)
            cut = int(np.flatnonzero(cdf >= cdf[-1] * (1.0 - specfun.POISSON_TAIL))[0])
            return pmf[: cut + 1]
        K *= 2


def _posterior(family, samples: SampleSet, prior: ConjugatePrior):
    if samples.censored:
        raise DomainError("Bayesian updating with lost-sales data is not supported")
    if isinstance(family, Binomial):
        X = samples.total
        a, b = X + prior.a, samples.trials(family.N) - X + prior.b
    elif isinstance(family, Poisson):
        samples.require_counts()
        a, b = samples.total + prior.a, samples.M + prior.b
    else:
        a, b = samples.M + prior.a, samples.total + prior.b
    if a <= 0 or b <= 0:
        raise DataError("posterior is improper for this prior and sample")
    return a, b


def predictive_pmf(family, samples: SampleSet, prior=None) -> np.ndarray:
    """Posterior-predictive demand mass for the discrete families."""
    prior = resolve_prior(family, prior)
    a, b = _posterior(family, samples, prior)
    if isinstance(family, Binomial):
        return beta_binomial_pmf(np.arange(family.N + 1), family.N, a, b)
    if isinstance(family, Poisson):
        return _negative_binomial_support(a, b)
    raise DomainError("exponential demand has a continuous predictive law")


def _lomax_policy(shape, scale, cost):
    if shape <= 1:
        raise DataError("predictive demand has infinite mean; increase the sample")
    Q = scale * ((1.0 - cost.beta) ** (-1.0 / shape) - 1.0)
    mean = scale / (shape - 1.0)
    shortfall = scale / (shape - 1.0) * (1.0 + Q / scale) ** (1.0 - shape)
    return Q, cost.h * (Q - mean) + (cost.h + cost.p) * shortfall


def hill_policy(family: DemandFamily, samples: SampleSet, cost: CostParams, prior=None):
    """Order the critical fractile of the posterior-predictive demand."""
    resolved = resolve_prior(family, prior)
    if isinstance(family, Exponential):
        shape, scale = _posterior(family, samples, resolved)
        Q, est = _lomax_policy(shape, scale, cost)
        return PointRecommendation(
            "Bayes", float(Q), float(est), {"posterior": (shape, scale)}
        )
    pmf = predictive_pmf(family, samples, resolved)
    Q = pmf_quantile(pmf, cost.beta)
    a, b = _posterior(family, samples, resolved)
    return PointRecommendation(
        "Bayes", Q, float(pmf_expected_cost(pmf, Q, cost)), {"posterior": (a, b)}
    )


_BOUNDS = ("open", "closed", "left-open", "right-open")


def _event_mask(k, delta1, delta2, bounds):
    if bounds == "open":
        return (k > delta1) & (k < delta2)
    if bounds == "closed":
        return (k >= delta1) & (k <= delta2)
    if bounds == "left-open":
        return (k > delta1) & (k <= delta2)
    if bounds == "right-open":
        return (k >= delta1) & (k < delta2)
    raise DomainError(f"bounds must be one of {_BOUNDS}, got {bounds!r}")


def bayes_event_probability(
    samples: SampleSet, N: int, delta1: int, delta2: int, bounds="open", prior=None
) -> float:
    """Predictive probability that binomial demand falls between delta1 and delta2.

    ``bounds`` picks which ends are included; the default excludes both.
    """
    if not delta1 < delta2:
        raise DomainError("event needs delta1 < delta2")
    pmf = predictive_pmf(Binomial(N), samples, prior)
    k = np.arange(N + 1)
    return float(pmf[_event_mask(k, delta1, delta2, bounds)].sum())


def batch_event_probability(successes, trials, N, delta1, delta2, bounds="open", prior=None):
    """bayes_event_probability for many binomial samples given their sums."""
    prior = resolve_prior(Binomial(N), prior)
    X = np.asarray(successes, float)
    k = np.arange(N + 1)[_event_mask(np.arange(N + 1), delta1, delta2, bounds)]
    if k.size == 0:
        return np.zeros(X.shape)
    a = X[..., None] + prior.a
    b = trials - X[..., None] + prior.b
    return beta_binomial_pmf(k, N, a, b).sum(axis=-1)


def true_event_probability(N: int, q: float, delta1: int, delta2: int, bounds="open"):
    k = np.arange(N + 1)
    pmf = specfun.binomial_pmf(k, N, q)
    return float(pmf[_event_mask(k, delta1, delta2, bounds)].sum())
