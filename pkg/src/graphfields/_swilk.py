"""Shapiro-Wilk W test, ported from the published algorithm (AS R94, Royston 1995).

Complete (uncensored) samples only, 3 <= n <= 5000.  The coefficient
polynomials below are the published ones; the port is validated against an
independent reference implementation in the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import StatsError

# polynomial coefficients, highest degree first (np.polyval order)
_G = (0.459, -2.273)
_C1 = (-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)
_C3 = (-0.0006714, 0.025054, -0.39978, 0.544)
_C4 = (-0.0020322, 0.062767, -0.77857, 1.3822)
_C5 = (0.0038915, -0.083751, -0.31082, -1.5861)
_C6 = (0.0030302, -0.082676, -0.4803)

_PI6 = 1.90985931710274  # 6/pi
_STQR = 1.04719755119660  # asin(sqrt(3/4))
_SMALL = 1e-19


def shapiro_wilk(sample) -> tuple[float, float]:
    """Return (W, p) for the composite normality hypothesis.

    Requires 3 <= n <= 5000 and a nondegenerate sample.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3:
        raise StatsError(f"Shapiro-Wilk needs at least 3 observations, got {n}")
    if n > 5000:
        raise StatsError(f"Shapiro-Wilk is calibrated up to n=5000, got {n}")
    if not np.all(np.isfinite(x)):
        raise StatsError("sample contains non-finite values")
    if x[-1] - x[0] < _SMALL:
        raise StatsError("sample range is zero")

    n2 = n // 2
    m = ndtri((np.arange(1, n2 + 1) - 0.375) / (n + 0.25))  # lower-half normal scores
    summ2 = 2.0 * float(m @ m)
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)

    if n == 3:
        a_half = np.array([math.sqrt(0.5)])
    else:
        a1 = np.polyval(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            a2 = np.polyval(_C2, rsn) - m[1] / ssumm2
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                            / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
            a_half = np.concatenate(([a1, a2], -m[2:] / fac))
        else:
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
            a_half = np.concatenate(([a1], -m[1:] / fac))

    weights = np.zeros(n)
    weights[:n2] = -a_half
    weights[n - n2:] = a_half[::-1]

    xc = x - x.mean()
    w_numer = float(weights @ x) ** 2
    w_denom = float(xc @ xc)
    w_stat = min(w_numer / w_denom, 1.0)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w_stat)) - _STQR)
        return w_stat, min(max(p, 0.0), 1.0)

    w1 = max(1.0 - w_stat, _SMALL)
    y = math.log(w1)
    if n <= 11:
        gamma = np.polyval(_G, n)
        if y >= gamma:
            return w_stat, _SMALL
        y = -math.log(gamma - y)
        mu = np.polyval(_C3, n)
        sigma = math.exp(np.polyval(_C4, n))
    else:
        ln_n = math.log(n)
        mu = np.polyval(_C5, ln_n)
        sigma = math.exp(np.polyval(_C6, ln_n))
    p = float(ndtr(-(y - mu) / sigma))
    return w_stat, p
