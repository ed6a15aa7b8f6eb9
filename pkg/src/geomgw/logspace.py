"""Log-domain probability arithmetic.

Every probability in this package travels as a natural log, with
float("-inf") standing for exact zero. Laws multiply thousands of factors
whose product underflows double precision long before the mathematics gets
interesting (a single conditioning event can sit at exp(-1000)), so linear
space is never used for anything that will be multiplied or summed across
a tree.
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy.special import gammaln

LOG_ZERO = float("-inf")


def log_add(x: float, y: float) -> float:
    """log(e^x + e^y), tolerant of -inf on either side."""
    if x == LOG_ZERO:
        return y
    if y == LOG_ZERO:
        return x
    return float(np.logaddexp(x, y))


def log_sub(x: float, y: float) -> float:
    """log(e^x - e^y) for x >= y. Returns -inf when the difference
    vanishes to within one ulp; raises if y exceeds x by more than
    roundoff, since a negative probability is always a bug upstream."""
    if y == LOG_ZERO:
        return x
    if y > x:
        if y - x < 1e-9:
            return LOG_ZERO
        raise ValueError(f"log_sub would go negative: x={x!r} y={y!r}")
    d = y - x
    if d == 0.0:
        return LOG_ZERO
    return x + math.log1p(-math.exp(d))


def log_sum(values: Iterable[float]) -> float:
    """log(sum(e^v)) over an iterable, empty sum -> -inf."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return LOG_ZERO
    m = float(arr.max())
    if m == LOG_ZERO:
        return LOG_ZERO
    return m + math.log(float(np.exp(arr - m).sum()))


def log_sum_arr(arr: np.ndarray) -> float:
    """log-sum-exp of a numpy array (already float)."""
    if arr.size == 0:
        return LOG_ZERO
    m = float(arr.max())
    if m == LOG_ZERO:
        return LOG_ZERO
    return m + math.log(float(np.exp(arr - m).sum()))


def log_binomial(n: float, k: float) -> float:
    """log C(n, k) for integer 0 <= k <= n, -inf outside that range.

    Uses lgamma, so n may be astronomically large (generation targets
    routinely reach 10^5 and beyond) at ~1e-15 relative accuracy.
    """
    if k < 0 or k > n:
        return LOG_ZERO
    if k == 0 or k == n:
        return 0.0
    return float(gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0))


def log_binomial_arr(n: float, k: np.ndarray) -> np.ndarray:
    """Vectorized log C(n, k) over an array of k, -inf outside [0, n]."""
    k = np.asarray(k, dtype=float)
    out = np.full(k.shape, LOG_ZERO)
    ok = (k >= 0) & (k <= n)
    kk = k[ok]
    out[ok] = gammaln(n + 1.0) - gammaln(kk + 1.0) - gammaln(n - kk + 1.0)
    return out


def log_poisson_tail(log_lam: float, i: int) -> float:
    """Certified upper bound for log sum_{j >= i} lam^j / j!.

    Valid once i + 1 > lam (the terms are then geometrically dominated
    with ratio lam / (i + 1)); returns +inf when the bound does not
    apply yet, so callers simply keep summing.
    """
    lam = math.exp(log_lam) if log_lam < 700 else math.inf
    if not (i + 1 > lam):
        return math.inf
    r = lam / (i + 1)
    return i * log_lam - float(gammaln(i + 1.0)) - math.log1p(-r)
