"""Shapiro-Wilk normality test with Royston's (1995) approximations.

Coefficients follow Applied Statistics algorithm AS R94 for complete
(uncensored) samples, 3 <= n <= 5000.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

MIN_N = 3
MAX_N = 5000

# polynomial coefficients, highest power first (np.polyval order)
_C1 = [-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0]
_C2 = [-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0]
_C3 = [-0.0006714, 0.025054, -0.39978, 0.544]
_C4 = [-0.0020322, 0.062767, -0.77857, 1.3822]
_C5 = [0.0038915, -0.083751, -0.31082, -1.5861]
_C6 = [0.0030302, -0.082676, -0.4803]
_G = [0.459, -2.273]


class ShapiroResult(NamedTuple):
    statistic: float
    pvalue: float
    applicable: bool = True

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.applicable and self.pvalue <= alpha


NOT_APPLICABLE = ShapiroResult(float("nan"), float("nan"), False)


def _coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights for the ordered sample (length ``n``)."""
    if n == 3:
        upper = np.array([math.sqrt(0.5)])
    else:
        m = -ndtri((np.arange(1, n // 2 + 1) - 0.375) / (n + 0.25))
        summ2 = 2.0 * np.sum(m * m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = m[0] / ssumm2 + np.polyval(_C1, rsn)
        if n > 5:
            a2 = m[1] / ssumm2 + np.polyval(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1 ** 2 - 2 * a2 ** 2))
            upper = m / fac
            upper[:2] = a1, a2
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1 ** 2))
            upper = m / fac
            upper[0] = a1
    a = np.zeros(n)
    k = len(upper)
    a[:k] = -upper
    a[n - k:] = upper[::-1]
    return a


def _pvalue(w: float, n: int) -> float:
    if n == 3:
        return max(0.0, min(1.0, 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))))
    w1 = 1.0 - w
    if w1 <= 0.0:
        return 1.0
    y = math.log(w1)
    if n <= 11:
        gamma = np.polyval(_G, n)
        if y >= gamma:
            return 1e-99
        y = -math.log(gamma - y)
        mu = np.polyval(_C3, n)
        sigma = math.exp(np.polyval(_C4, n))
    else:
        ln = math.log(n)
        mu = np.polyval(_C5, ln)
        sigma = math.exp(np.polyval(_C6, ln))
    return float(ndtr(-(y - mu) / sigma))


def shapiro_wilk(samples) -> ShapiroResult:
    """W statistic and p-value; not applicable outside ``3 <= n <= 5000``
    or for a sample with zero range."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n < MIN_N or n > MAX_N or not np.all(np.isfinite(x)):
        return NOT_APPLICABLE
    rng = x[-1] - x[0]
    if rng <= 1e-19 * max(1.0, abs(x[-1])):
        return NOT_APPLICABLE
    xs = (x - x.mean()) / rng
    a = _coefficients(n)
    w = float(np.dot(a, xs) ** 2 / np.dot(xs, xs))
    w = min(w, 1.0)
    return ShapiroResult(w, _pvalue(w, n))
