"""Special functions and distribution primitives.

Regularized incomplete beta and gamma functions are evaluated with
modified-Lentz continued fractions (plus the power series for the lower
incomplete gamma when ``x < a + 1``). Quantiles of the continuous laws are
found with a bracketed Newton iteration that falls back to bisection; the
discrete quantiles use integer bisection on the CDF.

Every function accepts scalars or numpy arrays and broadcasts its arguments.
Scalar inputs give back numpy scalars.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betaln, gammaln, xlog1py, xlogy

from .errors import ConvergenceError, DomainError

MAXIT = 500
EPS = 1e-15
FPMIN = 1e-300
# Poisson support is cut at the first k with cdf(k) >= 1 - POISSON_TAIL.
POISSON_TAIL = 1e-13


def _asfloat(*args):
    return [np.asarray(a, dtype=float) for a in np.broadcast_arrays(*args)]


def _unwrap(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def check_probability(value, name="probability", open_interval=False):
    v = np.asarray(value, dtype=float)
    if open_interval:
        ok = np.all((v > 0.0) & (v < 1.0))
    else:
        ok = np.all((v >= 0.0) & (v <= 1.0))
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise DomainError(f"{name} must lie in {bounds}, got {value!r}")
    return value


def check_rate(value, name="rate", allow_zero=False):
    v = np.asarray(value, dtype=float)
    ok = (v >= 0.0) if allow_zero else (v > 0.0)
    if not np.all(np.isfinite(v) & ok):
        sign = ">=" if allow_zero else ">"
        raise DomainError(f"{name} must be finite and {sign} 0, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# incomplete beta


def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < FPMIN, FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= EPS
        if not active.any():
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge in {MAXIT} iterations"
    )


def betainc_reg(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a, b, x = _asfloat(a, b, x)
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("incomplete beta requires a > 0 and b > 0")
    if np.any((x < 0) | (x > 1)):
        raise DomainError("incomplete beta requires 0 <= x <= 1")
    out = np.where(x >= 1.0, 1.0, 0.0)
    inner = (x > 0.0) & (x < 1.0)
    if inner.any():
        ai, bi, xi = a[inner], b[inner], x[inner]
        swap = xi > (ai + 1.0) / (ai + bi + 2.0)
        aa = np.where(swap, bi, ai)
        bb = np.where(swap, ai, bi)
        xx = np.where(swap, 1.0 - xi, xi)
        front = np.exp(xlogy(aa, xx) + xlog1py(bb, -xx) - betaln(aa, bb)) / aa
        val = front * _betacf(aa, bb, xx)
        out[inner] = np.where(swap, 1.0 - val, val)
    return _unwrap(np.clip(out, 0.0, 1.0))


def beta_cdf(x, a, b):
    return betainc_reg(a, b, x)


def beta_pdf(x, a, b):
    x, a, b = _asfloat(x, a, b)
    with np.errstate(divide="ignore"):
        logp = xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x) - betaln(a, b)
    return _unwrap(np.exp(logp))


# ---------------------------------------------------------------------------
# incomplete gamma


def _gamma_series(a, x):
    ap = a.copy()
    delta = 1.0 / a
    total = delta.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(MAXIT):
        ap = ap + 1.0
        delta = np.where(active, delta * x / ap, 0.0)
        total = total + delta
        active &= np.abs(delta) >= np.abs(total) * EPS
        if not active.any():
            return total * np.exp(-x + xlogy(a, x) - gammaln(a))
    raise ConvergenceError(
        f"incomplete gamma series did not converge in {MAXIT} iterations"
    )


def _gamma_cf(a, x):
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, MAXIT + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= EPS
        if not active.any():
            return np.exp(-x + xlogy(a, x) - gammaln(a)) * h
    raise ConvergenceError(
        f"incomplete gamma continued fraction did not converge in {MAXIT} iterations"
    )


def _gammainc_pq(a, x):
    a, x = _asfloat(a, x)
    if np.any(a <= 0):
        raise DomainError("incomplete gamma requires a > 0")
    if np.any(x < 0):
        raise DomainError("incomplete gamma requires x >= 0")
    lower = np.zeros_like(x)
    upper = np.ones_like(x)
    series = (x > 0) & (x < a + 1.0)
    if series.any():
        lower[series] = _gamma_series(a[series], x[series])
        upper[series] = 1.0 - lower[series]
    cf = x >= a + 1.0
    if cf.any():
        upper[cf] = _gamma_cf(a[cf], x[cf])
        lower[cf] = 1.0 - upper[cf]
    return np.clip(lower, 0.0, 1.0), np.clip(upper, 0.0, 1.0)


def gammainc_lower_reg(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    return _unwrap(_gammainc_pq(a, x)[0])


def gammainc_upper_reg(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return _unwrap(_gammainc_pq(a, x)[1])


def gamma_cdf(x, shape, scale=1.0):
    x, shape, scale = _asfloat(x, shape, scale)
    return gammainc_lower_reg(shape, x / scale)


def gamma_pdf(x, shape, scale=1.0):
    x, shape, scale = _asfloat(x, shape, scale)
    y = x / scale
    with np.errstate(divide="ignore"):
        logp = xlogy(shape - 1.0, y) - y - gammaln(shape) - np.log(scale)
    return _unwrap(np.exp(logp))


# ---------------------------------------------------------------------------
# continuous quantiles


def _newton_bisect(cdf, pdf, p, lo, hi, x0):
    """Solve cdf(x, idx) = p elementwise inside the bracket [lo, hi].

    ``cdf`` and ``pdf`` receive the current abscissae and the integer indices
    of the elements still iterating, so parameter arrays can be gathered.
    """
    x = x0.copy()
    lo = lo.copy()
    hi = hi.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(MAXIT):
        idx = np.flatnonzero(active)
        xi = x[idx]
        f = cdf(xi, idx) - p[idx]
        above = f > 0
        hi[idx[above]] = xi[above]
        lo[idx[~above]] = xi[~above]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xn = xi - f / pdf(xi, idx)
        bad = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx])
        xn[bad] = 0.5 * (lo[idx][bad] + hi[idx][bad])
        width = hi[idx] - lo[idx]
        done = (
            (f == 0)
            | (np.abs(xn - xi) <= 4 * EPS * np.abs(xn))
            | (width <= 4 * EPS * np.abs(xn))
        )
        xn[f == 0] = xi[f == 0]
        x[idx] = xn
        active[idx[done]] = False
        if not active.any():
            return x
    raise ConvergenceError(f"quantile iteration did not converge in {MAXIT} steps")


def beta_quantile(p, a, b):
    """x with I_x(a, b) = p, for 0 < p < 1."""
    check_probability(p, "p", open_interval=True)
    p, a, b = _asfloat(p, a, b)
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("beta quantile requires a > 0 and b > 0")
    shape = p.shape
    p, a, b = p.ravel(), a.ravel(), b.ravel()
    x = _newton_bisect(
        lambda x, i: betainc_reg(a[i], b[i], x),
        lambda x, i: beta_pdf(x, a[i], b[i]),
        p,
        np.zeros_like(p),
        np.ones_like(p),
        a / (a + b),
    )
    return _unwrap(x.reshape(shape))


def gamma_quantile(p, shape, scale=1.0):
    """x with P(shape, x / scale) = p, for 0 < p < 1."""
    check_probability(p, "p", open_interval=True)
    p, k, scale = _asfloat(p, shape, scale)
    if np.any(k <= 0):
        raise DomainError("gamma quantile requires shape > 0")
    check_rate(scale, "scale")
    out_shape = p.shape
    p, k, scale = p.ravel(), k.ravel(), scale.ravel()
    hi = k + 10.0 * np.sqrt(k) + 10.0
    for _ in range(MAXIT):
        short = gammainc_lower_reg(k, hi) < p
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise ConvergenceError("could not bracket gamma quantile")
    y = _newton_bisect(
        lambda y, i: gammainc_lower_reg(k[i], y),
        lambda y, i: gamma_pdf(y, k[i]),
        p,
        np.zeros_like(p),
        hi,
        np.minimum(k, 0.5 * hi),
    )
    return _unwrap((y * scale).reshape(out_shape))


def chi2_quantile(p, df):
    return gamma_quantile(p, np.asarray(df, dtype=float) / 2.0, 2.0)


# ---------------------------------------------------------------------------
# binomial


def _check_counts(k, N):
    k = np.asarray(k)
    N = np.asarray(N)
    if np.any(N < 0) or np.any(k < 0) or np.any(k > N):
        raise DomainError("binomial requires 0 <= k <= N")


def binomial_pmf(k, N, q):
    """C(N, k) q^k (1 - q)^(N - k), computed in log space."""
    _check_counts(k, N)
    check_probability(q, "q")
    k, N, q = _asfloat(k, N, q)
    logc = gammaln(N + 1.0) - gammaln(k + 1.0) - gammaln(N - k + 1.0)
    return _unwrap(np.exp(logc + xlogy(k, q) + xlog1py(N - k, -q)))


def binomial_cdf(k, N, q):
    """Pr{bin(N; q) <= k} via I_{1-q}(N - k, k + 1); exactly 1 at k = N."""
    _check_counts(k, N)
    check_probability(q, "q")
    k, N, q = _asfloat(k, N, q)
    out = np.ones_like(q)
    below = k < N
    if below.any():
        out[below] = np.asarray(
            betainc_reg(N[below] - k[below], k[below] + 1.0, 1.0 - q[below])
        )
    return _unwrap(out)


def binomial_sf(k, N, q):
    """Pr{bin(N; q) > k}."""
    _check_counts(k, N)
    check_probability(q, "q")
    k, N, q = _asfloat(k, N, q)
    out = np.zeros_like(q)
    below = k < N
    if below.any():
        out[below] = np.asarray(
            betainc_reg(k[below] + 1.0, N[below] - k[below], q[below])
        )
    return _unwrap(out)


def binomial_quantile(beta, N, q):
    """Smallest k in {0..N} with Pr{bin(N; q) <= k} >= beta."""
    check_probability(beta, "beta", open_interval=True)
    check_probability(q, "q")
    beta, N, q = np.broadcast_arrays(
        np.asarray(beta, float), np.asarray(N), np.asarray(q, float)
    )
    N = N.astype(np.int64)
    lo = np.full(q.shape, -1, dtype=np.int64)
    hi = N.copy()
    while np.any(hi - lo > 1):
        open_ = hi - lo > 1
        mid = (lo + hi) // 2
        c = np.ones(q.shape)
        c[open_] = np.asarray(binomial_cdf(mid[open_], N[open_], q[open_]))
        up = open_ & (c >= beta)
        down = open_ & ~(c >= beta)
        hi = np.where(up, mid, hi)
        lo = np.where(down, mid, lo)
    return _unwrap(hi)


# ---------------------------------------------------------------------------
# Poisson


def poisson_pmf(k, lam):
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("Poisson support is k >= 0")
    check_rate(lam, "lambda", allow_zero=True)
    k, lam = _asfloat(k, lam)
    return _unwrap(np.exp(xlogy(k, lam) - lam - gammaln(k + 1.0)))


def poisson_cdf(k, lam):
    """Pr{Poisson(lam) <= k} = Q(k + 1, lam)."""
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("Poisson support is k >= 0")
    check_rate(lam, "lambda", allow_zero=True)
    k, lam = _asfloat(k, lam)
    return gammainc_upper_reg(k + 1.0, lam)


def poisson_sf(k, lam):
    """Pr{Poisson(lam) > k} = P(k + 1, lam)."""
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("Poisson support is k >= 0")
    check_rate(lam, "lambda", allow_zero=True)
    k, lam = _asfloat(k, lam)
    return gammainc_lower_reg(k + 1.0, lam)


def poisson_cdf_by_summation(k, lam):
    """Reference CDF by summing the mass function term by term."""
    k = int(k)
    if k < 0:
        raise DomainError("Poisson support is k >= 0")
    check_rate(lam, "lambda", allow_zero=True)
    return float(np.sum(poisson_pmf(np.arange(k + 1), lam)))


def poisson_quantile(beta, lam):
    """Smallest k >= 0 with Pr{Poisson(lam) <= k} >= beta."""
    check_probability(beta, "beta", open_interval=True)
    check_rate(lam, "lambda", allow_zero=True)
    beta, lam = _asfloat(beta, lam)
    lo = np.full(lam.shape, -1, dtype=np.int64)
    hi = np.ceil(lam + 10.0 * np.sqrt(lam) + 10.0).astype(np.int64)
    while True:
        short = np.asarray(poisson_cdf(hi, lam)) < beta
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2 * hi, hi)
    while np.any(hi - lo > 1):
        open_ = hi - lo > 1
        mid = (lo + hi) // 2
        c = np.ones(lam.shape)
        c[open_] = np.asarray(poisson_cdf(mid[open_], lam[open_]))
        up = open_ & (c >= beta)
        down = open_ & ~(c >= beta)
        hi = np.where(up, mid, hi)
        lo = np.where(down, mid, lo)
    return _unwrap(hi)


def poisson_support_bound(lam):
    """Truncation point for Poisson sums: first k with cdf(k) >= 1 - POISSON_TAIL."""
    return poisson_quantile(1.0 - POISSON_TAIL, lam)


# ---------------------------------------------------------------------------
# exponential


def exponential_cdf(x, lam):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("exponential cdf requires x >= 0")
    check_rate(lam, "lambda")
    return _unwrap(-np.expm1(-np.asarray(lam, float) * x))


def exponential_quantile(p, lam):
    check_probability(p, "p")
    check_rate(lam, "lambda")
    with np.errstate(divide="ignore"):
        return _unwrap(-np.log1p(-np.asarray(p, float)) / np.asarray(lam, float))
