"""Newsvendor order quantities with exact confidence bounds on cost.

When the demand parameter is only known through a handful of samples, the
package returns the set of order quantities that are optimal somewhere in an
exact confidence interval for the parameter, plus a confidence interval for
the expected cost of each of them.
"""

from .confint import ParamInterval, SampleSet, interval_for
from .engine import IntervalSolution, solve
from .errors import ConvergenceError, DataError, DomainError
from .nvcore import Binomial, CostParams, Exponential, Poisson, expected_cost, optimal_q

__version__ = "0.1.0"

__all__ = [
    "Binomial",
    "ConvergenceError",
    "CostParams",
    "DataError",
    "DomainError",
    "Exponential",
    "IntervalSolution",
    "ParamInterval",
    "Poisson",
    "SampleSet",
    "expected_cost",
    "interval_for",
    "optimal_q",
    "solve",
]
