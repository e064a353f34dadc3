"""scikit-learn style front end.

The transformers act on series, while ``predict`` takes frequencies, so in a
pipeline call ``predict`` on the final step:

>>> from sklearn.pipeline import make_pipeline
>>> model = make_pipeline(SqrtTransform(), MeanCenter(), SpectralDensityEstimator(iterations=2000))
>>> model.fit(series)                          # doctest: +SKIP
>>> model[-1].predict(np.linspace(0.1, 3, 50))  # posterior median PSD  # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import spectra
from .prior import PriorConfig, default_truncation, fast_psd
from .sampler import McmcConfig, run_tempered
from .summary import PsdSamples, summarize


def _series(X):
    arr = check_array(X, ensure_2d=False, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError("expected a single time series: shape (n,) or (n, 1)")
        arr = arr[:, 0]
    return arr


class _SeriesTransform(TransformerMixin, BaseEstimator):
    """Stateless transform of one time series; keeps the input's 1-d/2-d shape."""

    def fit(self, X, y=None):
        _series(X)
        return self

    def transform(self, X):
        arr = _series(X)
        out = self._apply(spectra.TimeSeries(arr)).values
        return out.reshape(-1, 1) if np.ndim(X) == 2 else out


class MeanCenter(_SeriesTransform):
    def _apply(self, ts):
        return spectra.mean_center(ts)


class Difference(_SeriesTransform):
    def _apply(self, ts):
        return spectra.difference(ts)


class HannWindow(_SeriesTransform):
    def _apply(self, ts):
        return spectra.hann_window(ts)


class SqrtTransform(_SeriesTransform):
    def _apply(self, ts):
        return spectra.sqrt_transform(ts)


class SpectralDensityEstimator(BaseEstimator):
    """Posterior spectral density of a stationary series.

    ``fit`` takes the (preprocessed) series; ``predict`` maps angular
    frequencies in ``[0, pi]`` to the posterior median PSD. Set
    ``prior="bernstein"`` for the Bernstein-polynomial baseline and
    ``chains > 1`` for parallel tempering. ``log_band=True`` builds the
    uniform band from ``log f`` instead of ``f``.

    Fitted attributes: ``periodogram_``, ``trace_``, ``summary_`` (at the
    Fourier frequencies), ``prior_config_``, ``mcmc_config_`` and
    ``swap_rates_``.
    """

    def __init__(self, prior="bspline", degree=3, k_max=500, theta_k=0.01, M_G=1.0, M_H=1.0,
                 alpha_tau=0.001, beta_tau=0.001, truncation=None, iterations=40_000, burn_in=None,
                 thin=10, chains=1, t_min=0.005, swap_interval=10, alpha=0.1,
                 log_band=False, require_centered=True, random_state=0):
        self.prior = prior
        self.degree = degree
        self.k_max = k_max
        self.theta_k = theta_k
        self.M_G = M_G
        self.M_H = M_H
        self.alpha_tau = alpha_tau
        self.beta_tau = beta_tau
        self.truncation = truncation
        self.iterations = iterations
        self.burn_in = burn_in
        self.thin = thin
        self.chains = chains
        self.t_min = t_min
        self.swap_interval = swap_interval
        self.alpha = alpha
        self.log_band = log_band
        self.require_centered = require_centered
        self.random_state = random_state

    def _configs(self, n):
        L = self.truncation or default_truncation(n)
        prior = PriorConfig(
            degree=self.degree, k_max=self.k_max, theta_k=self.theta_k, M_G=self.M_G, M_H=self.M_H,
            alpha_tau=self.alpha_tau, beta_tau=self.beta_tau, L_G=L, L_H=L, family=self.prior,
        )
        seed = self.random_state if self.random_state is not None else 0
        mcmc = McmcConfig(
            iterations=self.iterations, burn_in=self.burn_in, thin=self.thin, seed=int(seed),
            chains=self.chains, t_min=self.t_min, swap_interval=self.swap_interval,
        )
        return prior, mcmc

    def fit(self, X, y=None):
        arr = _series(X)
        ts = spectra.TimeSeries(arr)
        if len(ts) < spectra.MIN_LENGTH:
            raise ValueError(f"need at least {spectra.MIN_LENGTH} observations")
        self.periodogram_ = spectra.periodogram(ts, require_centered=self.require_centered)
        self.prior_config_, self.mcmc_config_ = self._configs(len(ts))
        result = run_tempered(self.periodogram_, self.prior_config_, self.mcmc_config_)
        self.trace_ = result.trace
        self.swap_rates_ = result.swap_rates()
        self.summary_ = summarize(
            PsdSamples(self.periodogram_.frequencies, self.trace_.psd), self.alpha,
            self.trace_.k, self.trace_.tau, self.log_band,
        )
        return self

    def sample_psd(self, frequencies) -> np.ndarray:
        """Posterior PSD draws at angular ``frequencies``, shape ``(samples, len(frequencies))``."""
        check_is_fitted(self, "trace_")
        lam = np.atleast_1d(np.asarray(frequencies, dtype=float))
        if np.any((lam < 0) | (lam > np.pi)):
            raise ValueError("frequencies must lie in [0, pi]")
        om = lam / np.pi
        return np.array([fast_psd(st, self.prior_config_, om) for st in self.trace_.states()])

    def predict(self, X) -> np.ndarray:
        """Posterior median spectral density at angular frequencies ``X``."""
        return np.median(self.sample_psd(X), axis=0)

    def score(self, X, y=None) -> float:
        """Whittle log-likelihood of series ``X`` under the posterior median PSD."""
        check_is_fitted(self, "trace_")
        pg = spectra.periodogram(spectra.TimeSeries(_series(X)), require_centered=self.require_centered)
        return spectra.whittle_loglik(pg, self.predict(pg.frequencies))
