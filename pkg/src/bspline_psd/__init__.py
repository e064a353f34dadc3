"""Bayesian nonparametric spectral density estimation with B-spline mixture priors."""

__version__ = "0.1.0"
