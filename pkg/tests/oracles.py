"""Independent numeric oracles used by the test suite.

Nothing here reuses the code paths under test: spectral-law CDFs are obtained
by numerically integrating the catalog densities (with smooth substitutions
at integrable singularities), the exact-Gaussian reference field comes from a
direct covariance factorization, and Monte Carlo tolerances use standard
error formulas.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy import special as sp
from scipy import stats as st

from graphfields.covmodels import CovarianceModel, cov_value


def variance_se(true_var: float, n: int) -> float:
    """Standard error of the sample variance of n Gaussian increments."""
    return true_var * math.sqrt(2.0 / (n - 1))


def mean_se(sample: np.ndarray) -> float:
    return float(sample.std(ddof=1) / math.sqrt(sample.size))


def corr_se(rho: float, n: int) -> float:
    """Approximate standard error of a sample correlation."""
    return (1.0 - rho * rho) / math.sqrt(n - 1)


def cov_se(rho: float, n: int) -> float:
    """Standard error of the sample covariance of a unit-variance Gaussian pair."""
    return math.sqrt((1.0 + rho * rho) / (n - 1))


def _cauchy_scale_tail(a: float, r: float) -> float:
    """Numeric 2 * integral_r^inf of the Cauchy(scale a) density, via v = 1/w."""
    val, _ = integrate.quad(lambda v: 2.0 * a / (math.pi * (a * a * v * v + 1.0)),
                            0.0, 1.0 / r, epsabs=1e-14, limit=100)
    return val


def magnitude_cdf(m: CovarianceModel, r: float) -> float:
    """P(|W| <= r) by quadrature of the spectral density.

    Edge/origin singularities are removed by the substitutions noted inline,
    and the heavy-tailed families switch to complementary-tail integrals for
    large r (a single adaptive pass over a huge interval would miss the
    concentrated density near the origin).
    """
    a = m.a
    if r <= 0:
        return 0.0
    fam = m.family
    if fam == "S2":
        hi = min(r, a)
        val, _ = integrate.quad(lambda w: 1.0 / a, 0.0, hi, epsabs=1e-12)
        return min(val, 1.0)
    if fam == "S3":
        if r <= 20.0 * a:
            val, _ = integrate.quad(lambda w: 2.0 / (math.pi * a * (1.0 + w * w / (a * a))),
                                    0.0, r, epsabs=1e-12, limit=200)
            return val
        return 1.0 - _cauchy_scale_tail(a, r)
    if fam == "S4":
        if r <= a:
            return 0.0
        # u = sqrt(w^2 - a^2) removes the inverse square-root edge singularity;
        # in u the density is exactly Cauchy with scale a
        hi = math.sqrt(r * r - a * a)
        if hi <= 20.0 * a:
            val, _ = integrate.quad(lambda u: 2.0 * a / (math.pi * (a * a + u * u)),
                                    0.0, hi, epsabs=1e-12, limit=200)
            return val
        return 1.0 - _cauchy_scale_tail(a, hi)
    if fam == "S6":
        # g = w^2 then u = g^tau keeps the integrand bounded for tau < 1
        tau = m.tau
        c = a ** tau / (sp.gamma(tau) * tau)
        dens = lambda u: c * math.exp(-a * u ** (1.0 / tau))
        hi = (r * r) ** tau
        cap = ((40.0 + 10.0 * tau) / a) ** tau  # integrand below ~1e-17 beyond
        if hi <= cap:
            val, _ = integrate.quad(dens, 0.0, hi, epsabs=1e-12, limit=200)
            return val
        val, _ = integrate.quad(dens, 0.0, cap, epsabs=1e-12, limit=200)
        return min(val, 1.0)
    if fam == "S7":
        c = 2.0 * math.sqrt(2.0) / (a * sp.gamma(0.25))
        val, _ = integrate.quad(lambda w: c * math.exp(-w ** 4 / (4.0 * a ** 4)),
                                0.0, min(r, 12.0 * a), epsabs=1e-12, limit=200)
        return min(val, 1.0)
    if fam == "S8":
        # s = 1/w turns the essential origin singularity into a Gaussian tail
        val, _ = integrate.quad(lambda s: (a / math.sqrt(math.pi)) * math.exp(-a * a * s * s / 4.0),
                                1.0 / r, np.inf, epsabs=1e-12, limit=200)
        return val
    raise ValueError(f"no numeric CDF for family {fam}")


def spectral_cdf(m: CovarianceModel, x: float) -> float:
    """Signed CDF of the (symmetric) spectral law."""
    h = magnitude_cdf(m, abs(x))
    return 0.5 + 0.5 * h if x >= 0 else 0.5 - 0.5 * h


def ks_test_vs_numeric_cdf(m: CovarianceModel, sample: np.ndarray) -> float:
    """Kolmogorov-Smirnov p-value of a sample against the quadrature CDF."""
    xs = np.sort(sample)
    n = xs.size
    cdf = np.array([spectral_cdf(m, x) for x in xs])
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    return float(st.kstwo.sf(d, n))


def gaussian_reference_field(dvalues: np.ndarray, m: CovarianceModel, reps: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Exactly Gaussian field with the model covariance, by direct factorization.

    Independent of the simulation algorithms; only usable for small point
    counts.  Returns an array of shape (n_points, reps).
    """
    cov = np.asarray(cov_value(m, dvalues))
    cov = cov + 1e-12 * np.eye(cov.shape[0])
    lower = np.linalg.cholesky(cov)
    return lower @ rng.standard_normal((cov.shape[0], reps))
