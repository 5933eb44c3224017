"""Validation battery: variograms, madograms, Student tests, normality experiments.

Empirical semi-variograms gamma_2 = mean of (Y(u)-Y(v))^2 / 2 and
semi-madograms gamma_1 = mean of |Y(u)-Y(v)| / 2 are binned by resistance
distance and kept per replicate so that lag-wise Student tests against the
theoretical curves are possible.  For a Gaussian field the two estimators are
linked by gamma_1 = sqrt(gamma_2 / pi).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as st

from .covmodels import CovarianceModel, cov_value
from .errors import StatsError
from .graphs import PointSet
from .resistance import ResistanceMatrix
from .simulate import RealizationSet, SimConfig, rng_substream, simulate
from ._swilk import shapiro_wilk

__all__ = [
    "VariogramEstimate",
    "TTestReport",
    "LagTest",
    "NormalityReport",
    "make_bins",
    "scale_relative_lags",
    "empirical_semivariogram",
    "empirical_semimadogram",
    "theoretical_curves",
    "variogram_ttest",
    "shapiro_wilk",
    "normality_experiment",
    "normality_weights",
    "write_variogram_csv",
    "write_normality_csv",
]

logger = logging.getLogger(__name__)

PAIR_LIMIT = 5_000_000
PAIR_SUBSAMPLE_SEED = 1905


@dataclass
class VariogramEstimate:
    """Binned estimates with per-replicate values retained for testing."""

    kind: str                 # "semivariogram" or "semimadogram"
    lag_centers: np.ndarray   # (n_bins,)
    counts: np.ndarray        # pairs per bin
    per_rep: np.ndarray       # (n_bins, n_reps)
    bin_width: float

    @property
    def mean(self) -> np.ndarray:
        return self.per_rep.mean(axis=1)

    @property
    def n_reps(self) -> int:
        return self.per_rep.shape[1]


def make_bins(dmat: ResistanceMatrix, n_bins: int = 15, upper_fraction: float = 0.9) -> np.ndarray:
    """Equal-width bin edges spanning [0, upper_fraction * max distance]."""
    dmax = float(dmat.values.max())
    if dmax <= 0:
        raise StatsError("all resistance distances are zero; nothing to bin")
    return np.linspace(0.0, upper_fraction * dmax, n_bins + 1)


def scale_relative_lags(dmat: ResistanceMatrix, upper_fraction: float = 0.9,
                        fractions=(0.04, 0.2, 0.4, 0.6, 0.8, 1.0)) -> np.ndarray:
    """Testing lags at fixed fractions of the binned distance range.

    Keeps lag placement comparable across networks of different size.
    """
    top = upper_fraction * float(dmat.values.max())
    return np.asarray(fractions) * top


def _pairs(dmat: ResistanceMatrix):
    P = dmat.values.shape[0]
    iu, ju = np.triu_indices(P, k=1)
    d = dmat.values[iu, ju]
    if d.size > PAIR_LIMIT:
        rng = np.random.default_rng(PAIR_SUBSAMPLE_SEED)
        keep = rng.choice(d.size, PAIR_LIMIT, replace=False)
        keep.sort()
        logger.info("subsampling %d of %d pairs (seed %d)", PAIR_LIMIT, d.size, PAIR_SUBSAMPLE_SEED)
        return iu[keep], ju[keep], d[keep]
    return iu, ju, d


def _empirical(kind: str, real, dmat: ResistanceMatrix, bin_edges) -> VariogramEstimate:
    values = real.values if isinstance(real, RealizationSet) else np.asarray(real)
    if isinstance(real, RealizationSet) and real.pointset != dmat.pointset:
        raise StatsError("resistance matrix was computed for a different point set")
    if values.shape[0] != dmat.values.shape[0]:
        raise StatsError(
            f"realizations cover {values.shape[0]} points but the distance matrix {dmat.values.shape[0]}"
        )
    edges = np.asarray(bin_edges, dtype=float) if bin_edges is not None else make_bins(dmat)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise StatsError("bin edges must be strictly increasing")
    iu, ju, d = _pairs(dmat)
    n_bins = edges.size - 1
    idx = np.searchsorted(edges, d, side="right") - 1
    valid = (idx >= 0) & (idx < n_bins)
    idx = idx[valid]
    iu, ju = iu[valid], ju[valid]
    counts = np.bincount(idx, minlength=n_bins)

    reps = values.shape[1]
    per_rep = np.zeros((n_bins, reps))
    safe = np.where(counts > 0, counts, 1)
    for r in range(reps):
        diff = values[iu, r] - values[ju, r]
        contrib = 0.5 * diff * diff if kind == "semivariogram" else 0.5 * np.abs(diff)
        per_rep[:, r] = np.bincount(idx, weights=contrib, minlength=n_bins) / safe

    keep = counts > 0
    if not keep.all():
        logger.info("%s: omitting %d empty bins", kind, int((~keep).sum()))
    centers = 0.5 * (edges[:-1] + edges[1:])
    return VariogramEstimate(kind, centers[keep], counts[keep], per_rep[keep],
                             float(edges[1] - edges[0]))


def empirical_semivariogram(real, dmat: ResistanceMatrix, bin_edges=None) -> VariogramEstimate:
    """Per-replicate binned estimates of half the squared increment."""
    return _empirical("semivariogram", real, dmat, bin_edges)


def empirical_semimadogram(real, dmat: ResistanceMatrix, bin_edges=None) -> VariogramEstimate:
    """Per-replicate binned estimates of half the absolute increment."""
    return _empirical("semimadogram", real, dmat, bin_edges)


def theoretical_curves(m: CovarianceModel, lags):
    """(semi-variogram, semi-madogram) theory: 1 - C(d) and sqrt((1 - C(d))/pi)."""
    lags = np.asarray(lags, dtype=float)
    if np.any(lags < 0):
        raise StatsError("lags must be nonnegative")
    gamma2 = 1.0 - np.asarray(cov_value(m, lags))
    gamma1 = np.sqrt(np.clip(gamma2, 0.0, None) / np.pi)
    return gamma2, gamma1


@dataclass
class LagTest:
    lag: float
    bin_center: float
    count: int
    mean: float
    theory: float
    t_stat: float
    df: int
    critical: float
    accept: bool


@dataclass
class TTestReport:
    kind: str
    level: float
    rows: list[LagTest]

    @property
    def n_accepted(self) -> int:
        return sum(r.accept for r in self.rows)


def variogram_ttest(est: VariogramEstimate, m: CovarianceModel, lags,
                    level: float = 0.05) -> TTestReport:
    """Two-sided Student test of the estimator mean against theory, per lag.

    Each requested lag maps to the nearest populated bin center; T uses the
    across-replicate standard deviation with df = replicates - 1.
    """
    reps = est.n_reps
    if reps < 2:
        raise StatsError("Student test needs at least 2 replicates")
    gamma2, gamma1 = theoretical_curves(m, est.lag_centers)
    theory_all = gamma2 if est.kind == "semivariogram" else gamma1
    df = reps - 1
    critical = float(st.t.ppf(1.0 - level / 2.0, df))
    rows = []
    for lag in np.atleast_1d(np.asarray(lags, dtype=float)):
        k = int(np.argmin(np.abs(est.lag_centers - lag)))
        if abs(est.lag_centers[k] - lag) > est.bin_width:
            raise StatsError(f"lag {lag:g} is not covered by the estimate's bins")
        sample = est.per_rep[k]
        mean = float(sample.mean())
        sd = float(sample.std(ddof=1))
        theo = float(theory_all[k])
        scale = max(1.0, abs(mean))
        if sd <= 1e-13 * scale:
            # degenerate (constant) replicates: zero unless theory truly differs
            t_stat = 0.0 if abs(mean - theo) <= 1e-11 * scale else math.inf
        else:
            t_stat = (mean - theo) / (sd / math.sqrt(reps))
        rows.append(LagTest(float(lag), float(est.lag_centers[k]), int(est.counts[k]),
                            mean, theo, float(t_stat), df, critical, abs(t_stat) < critical))
    return TTestReport(est.kind, level, rows)


def normality_weights(n: int, seed: int = 0) -> np.ndarray:
    """Fixed linear-combination weights, drawn once from Uniform(-10, 10)."""
    return rng_substream(seed, 0, 0, "weights").uniform(-10.0, 10.0, n)


@dataclass
class NormalityRow:
    alpha: float
    proportion: float
    band_lo: float
    band_hi: float
    in_band: bool


@dataclass
class NormalityReport:
    rows: list[NormalityRow]
    batches: int
    runs_per_batch: int
    pvalues: np.ndarray

    @property
    def fraction_in_band(self) -> float:
        return sum(r.in_band for r in self.rows) / len(self.rows)


def normality_experiment(g, sys, cfg: SimConfig, locations: PointSet,
                         weights, runs_per_batch: int = 100, batches: int = 100,
                         alphas=None) -> NormalityReport:
    """Shapiro-Wilk rejection proportions for a fixed linear combination.

    Each batch simulates ``runs_per_batch`` independent realizations at the
    given locations, forms the weighted combination per realization, and
    applies one Shapiro-Wilk test to the batch.  Rejection proportions across
    batches are compared with the 90% band of Binomial(batches, alpha).
    """
    weights = np.asarray(weights, dtype=float)
    if len(locations) != weights.size:
        raise StatsError("one weight per location is required")
    if len(locations) < 2:
        raise StatsError("the linear combination needs at least 2 locations")
    if alphas is None:
        alphas = np.round(np.arange(0.01, 0.201, 0.01), 4)
    alphas = np.asarray(alphas, dtype=float)

    pvalues = np.empty(batches)
    batch_cfg = SimConfig(cfg.algorithm, cfg.model, cfg.copies, runs_per_batch,
                          cfg.seed, cfg.interval, cfg.germ, cfg.threads)
    for b in range(batches):
        rs = simulate(g, sys, locations, batch_cfg, rep_offset=b * runs_per_batch)
        combos = weights @ rs.values
        _, pvalues[b] = shapiro_wilk(combos)

    rows = []
    for alpha in alphas:
        prop = float(np.mean(pvalues < alpha))
        lo = float(st.binom.ppf(0.05, batches, alpha)) / batches
        hi = float(st.binom.ppf(0.95, batches, alpha)) / batches
        rows.append(NormalityRow(float(alpha), prop, lo, hi, lo <= prop <= hi))
    return NormalityReport(rows, batches, runs_per_batch, pvalues)


def write_variogram_csv(path: str, est: VariogramEstimate, report: TTestReport | None = None,
                        header_lines=()) -> None:
    import csv

    by_center = {}
    if report is not None:
        by_center = {round(r.bin_center, 12): r for r in report.rows}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lag_center", "count", "mean", "theory", "t_stat"])
        for k, center in enumerate(est.lag_centers):
            row = by_center.get(round(float(center), 12))
            writer.writerow([
                f"{center:.17g}", int(est.counts[k]), f"{est.mean[k]:.17g}",
                f"{row.theory:.17g}" if row else "",
                f"{row.t_stat:.17g}" if row else "",
            ])


def write_normality_csv(path: str, report: NormalityReport, header_lines=()) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "proportion", "band_lo", "band_hi"])
        for row in report.rows:
            writer.writerow([f"{row.alpha:g}", f"{row.proportion:.17g}",
                             f"{row.band_lo:.17g}", f"{row.band_hi:.17g}"])
