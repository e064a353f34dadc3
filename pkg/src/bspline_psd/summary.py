"""Posterior summaries of sampled spectral densities.

Quantiles use linear interpolation between order statistics (numpy's
``"linear"`` method); the median absolute deviation is unscaled.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

QUANTILE_METHOD = "linear"
SUMMARY_COLUMNS = ("freq", "median", "lo_point", "hi_point", "lo_unif", "hi_unif")


class DegenerateBandWarning(UserWarning):
    """All posterior curves coincide, so the uniform band has zero width."""


@dataclass(frozen=True)
class PsdSamples:
    grid: np.ndarray = field(repr=False)
    curves: np.ndarray = field(repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        curves = np.atleast_2d(np.asarray(self.curves, dtype=float))
        if curves.shape[1] != grid.size:
            raise ValueError("curves must have one column per grid point")
        if curves.shape[0] < 1:
            raise ValueError("need at least one sample")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "curves", curves)

    @property
    def n_samples(self) -> int:
        return self.curves.shape[0]


@dataclass
class PosteriorSummary:
    grid: np.ndarray
    median: np.ndarray
    lo_point: np.ndarray
    hi_point: np.ndarray
    lo_unif: np.ndarray
    hi_unif: np.ndarray
    zeta: float
    alpha: float
    k_trace: np.ndarray | None = None
    tau_trace: np.ndarray | None = None

    def log(self) -> dict:
        """Log-scale copies of the curves for display (non-positive bounds become -inf)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return {
                name: np.where(arr > 0, np.log(np.maximum(arr, 1e-300)), -np.inf)
                for name, arr in (
                    ("median", self.median),
                    ("lo_point", self.lo_point),
                    ("hi_point", self.hi_point),
                    ("lo_unif", self.lo_unif),
                    ("hi_unif", self.hi_unif),
                )
            }


def _as_samples(samples):
    return samples if isinstance(samples, PsdSamples) else PsdSamples(np.arange(np.shape(samples)[-1]), samples)


def pointwise_summary(samples, alpha: float = 0.1):
    """Median and equal-tailed ``alpha/2``, ``1 - alpha/2`` quantiles at each grid point."""
    s = _as_samples(samples)
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    c = s.curves
    med = np.median(c, axis=0)
    lo, hi = np.quantile(c, [alpha / 2, 1 - alpha / 2], axis=0, method=QUANTILE_METHOD)
    return med, lo, hi


def uniform_band(samples, alpha: float = 0.1):
    """Simultaneous band ``median +- zeta * mad``.

    ``zeta`` is the ``1 - alpha`` quantile over samples of the largest
    standardized deviation ``|f_i - median| / mad`` across the grid. Grid
    points with zero mad are left out of the maximum and get a zero-width band.

    Returns ``(lower, upper, zeta, median, mad)``.
    """
    s = _as_samples(samples)
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    c = s.curves
    med = np.median(c, axis=0)
    dev = np.abs(c - med)
    mad = np.median(dev, axis=0)
    ok = mad > 0
    if not ok.any():
        warnings.warn("posterior curves are identical; zero-width band", DegenerateBandWarning, stacklevel=2)
        return med.copy(), med.copy(), 0.0, med, mad
    stat = np.max(dev[:, ok] / mad[ok], axis=1)
    zeta = float(np.quantile(stat, 1 - alpha, method=QUANTILE_METHOD))
    return med - zeta * mad, med + zeta * mad, zeta, med, mad


def summarize(samples, alpha: float = 0.1, k_trace=None, tau_trace=None, log_scale: bool = False) -> PosteriorSummary:
    """Pointwise and uniform summaries.

    With ``log_scale`` the uniform band is built from ``log f`` and mapped
    back with ``exp``, giving a multiplicative band that stays positive.
    Pointwise quantiles do not depend on the scale.
    """
    s = _as_samples(samples)
    med, lo, hi = pointwise_summary(s, alpha)
    if log_scale:
        if np.any(s.curves <= 0):
            raise ValueError("log-scale band needs strictly positive curves")
        ulo, uhi, zeta, _, _ = uniform_band(PsdSamples(s.grid, np.log(s.curves)), alpha)
        ulo, uhi = np.exp(ulo), np.exp(uhi)
    else:
        ulo, uhi, zeta, _, _ = uniform_band(s, alpha)
    return PosteriorSummary(s.grid, med, lo, hi, ulo, uhi, zeta, alpha, k_trace, tau_trace)


def iae(frequencies, estimate, truth, n_grid: int = 4096) -> float:
    """Integrated absolute error over ``[0, pi]``.

    The estimate is interpolated linearly between its frequencies and held
    constant beyond the outermost ones; ``truth`` is a callable of angular
    frequency. Trapezoidal rule on ``n_grid`` equispaced points.
    """
    if n_grid < 2048:
        raise ValueError("use at least 2048 quadrature points")
    lam = np.linspace(0.0, np.pi, n_grid)
    est = np.interp(lam, np.asarray(frequencies, dtype=float), np.asarray(estimate, dtype=float))
    return float(np.trapezoid(np.abs(est - np.asarray(truth(lam), dtype=float)), lam))


def covered(truth, lower, upper, grid=None) -> bool:
    """True when the truth lies inside the band at every grid point.

    ``truth`` is either an array aligned with the band or a callable
    evaluated at ``grid``.
    """
    f = truth(np.asarray(grid)) if callable(truth) else np.asarray(truth, dtype=float)
    return bool(np.all((np.asarray(lower) <= f) & (f <= np.asarray(upper))))


def write_summary_csv(path, summary: PosteriorSummary, freq=None):
    """Write the plot-ready summary table; ``freq`` defaults to the summary grid."""
    freq = summary.grid if freq is None else np.asarray(freq)
    cols = (freq, summary.median, summary.lo_point, summary.hi_point, summary.lo_unif, summary.hi_unif)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def read_summary_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array(rows[1:], dtype=float).reshape(-1, len(SUMMARY_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(SUMMARY_COLUMNS)}
