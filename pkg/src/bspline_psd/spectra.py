"""Time-series preprocessing, periodogram, Whittle likelihood and AR spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

MIN_LENGTH = 8


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray = field(repr=False)
    sampling_interval: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("time series must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ValueError("time series contains non-finite values")
        if not self.sampling_interval > 0:
            raise ValueError("sampling_interval must be positive")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def _replace(self, values):
        return TimeSeries(values, self.sampling_interval)


@dataclass(frozen=True)
class Periodogram:
    """Ordinates at the positive Fourier frequencies ``2 pi l / n``, ``l = 1..(n-1)//2``."""

    frequencies: np.ndarray = field(repr=False)
    ordinates: np.ndarray = field(repr=False)
    n: int
    sampling_interval: float = 1.0

    @property
    def omegas(self) -> np.ndarray:
        """Frequencies rescaled to [0, 1] (``lambda / pi``)."""
        return self.frequencies / np.pi

    @property
    def cycles(self) -> np.ndarray:
        """Frequencies in cycles per unit of ``sampling_interval``."""
        return self.frequencies / (2 * np.pi * self.sampling_interval)

    def __len__(self):
        return self.ordinates.size


@dataclass(frozen=True)
class ArModel:
    coefficients: tuple = ()
    innovation_variance: float = 1.0

    def __post_init__(self):
        coefs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", coefs)
        if not self.innovation_variance > 0:
            raise ValueError("innovation variance must be positive")
        if not self.is_stationary():
            raise ValueError(f"AR coefficients {coefs} are not stationary")

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def is_stationary(self) -> bool:
        if not self.coefficients:
            return True
        # roots of 1 - sum rho_j z^j must lie outside the unit circle
        poly = np.r_[-np.array(self.coefficients)[::-1], 1.0]
        return bool(np.all(np.abs(np.roots(poly)) > 1.0))


AR1 = ArModel((0.9,))
AR4 = ArModel((0.9, -0.9, 0.9, -0.9))


def _as_series(ts):
    return ts if isinstance(ts, TimeSeries) else TimeSeries(ts)


def mean_center(ts: TimeSeries) -> TimeSeries:
    ts = _as_series(ts)
    return ts._replace(ts.values - ts.values.mean())


def difference(ts: TimeSeries) -> TimeSeries:
    ts = _as_series(ts)
    if len(ts) < 2:
        raise ValueError("need at least two observations to difference")
    return ts._replace(np.diff(ts.values))


def hann_weights(n: int) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    t = np.arange(n)
    return 0.5 * (1.0 - np.cos(2 * np.pi * t / (n - 1)))


def hann_window(ts: TimeSeries) -> TimeSeries:
    """Multiply by the symmetric Hann window (zero at both endpoints)."""
    ts = _as_series(ts)
    return ts._replace(ts.values * hann_weights(len(ts)))


def sqrt_transform(ts: TimeSeries) -> TimeSeries:
    ts = _as_series(ts)
    if np.any(ts.values < 0):
        raise ValueError("square-root transform needs nonnegative values")
    return ts._replace(np.sqrt(ts.values))


def fourier_frequencies(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(1, (n - 1) // 2 + 1) / n


def periodogram(ts: TimeSeries, require_centered: bool = True) -> Periodogram:
    """``|sum_t y_t exp(-i t lambda)|^2 / (2 pi n)`` at the positive Fourier frequencies.

    The zero and Nyquist frequencies are dropped. By default the series must
    be mean-centered; pass ``require_centered=False`` for windowed data.
    """
    ts = _as_series(ts)
    y = ts.values
    n = y.size
    if require_centered:
        sd = y.std()
        if abs(y.mean()) > 1e-8 * max(sd, np.finfo(float).tiny) and abs(y.mean()) > 1e-12:
            raise ValueError("periodogram input must be mean-centered")
    nf = (n - 1) // 2
    coefs = np.fft.rfft(y)[1 : nf + 1]
    ords = np.abs(coefs) ** 2 / (2 * np.pi * n)
    return Periodogram(fourier_frequencies(n), ords, n, ts.sampling_interval)


def whittle_loglik(pg: Periodogram, psd) -> float:
    """Whittle log-likelihood ``-sum(log f + I / f)`` up to an additive constant.

    Returns ``-inf`` when the spectrum is not strictly positive at every
    Fourier frequency, so Metropolis steps reject such proposals.
    """
    f = np.asarray(psd, dtype=float)
    if f.shape != pg.ordinates.shape:
        raise ValueError("psd must be evaluated at every Fourier frequency")
    if not np.all(f > 0):
        return -np.inf
    return float(-np.sum(np.log(f) + pg.ordinates / f))


def ar_psd(model: ArModel, lam):
    """Spectral density ``sigma^2 / (2 pi |1 - sum_j rho_j e^{-i j lambda}|^2)``."""
    lam = np.asarray(lam, dtype=float)
    j = np.arange(1, model.order + 1)
    rho = np.array(model.coefficients)
    transfer = 1.0 - np.exp(-1j * np.multiply.outer(lam, j)) @ rho if model.order else 1.0
    out = model.innovation_variance / (2 * np.pi) / np.abs(transfer) ** 2
    return float(out) if out.ndim == 0 else out


def simulate_ar(model: ArModel, n: int, rng, sampling_interval: float = 1.0) -> TimeSeries:
    """Gaussian AR(p) path of length ``n`` after a discarded warm-up.

    ``rng`` is a ``numpy.random.Generator`` or a seed.
    """
    if n < MIN_LENGTH:
        raise ValueError(f"need n >= {MIN_LENGTH}")
    rng = np.random.default_rng(rng)
    warm = max(10 * model.order, 1000)
    eps = rng.standard_normal(n + warm) * np.sqrt(model.innovation_variance)
    y = lfilter([1.0], np.r_[1.0, -np.array(model.coefficients)], eps)
    return TimeSeries(y[warm:], sampling_interval)
