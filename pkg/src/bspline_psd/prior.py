"""Truncated stick-breaking prior on mixture weights, knots, k and tau.

A sampler state holds two truncated Dirichlet processes: ``(v, z)`` induces
the mixture weights and ``(u, x)`` the knot differences. The Bernstein
baseline shares the weight process and ignores ``(u, x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special, stats

from . import _kernels
from .splines import BsplineDensityBasis, build_knots, eval_mixture

FAMILIES = ("bspline", "bernstein")

# Gamma draws with a tiny shape underflow to zero about half the time when the
# shape is 0.001; flooring keeps tau = beta / gamma finite.
GAMMA_FLOOR = np.finfo(float).tiny


def default_truncation(n: int) -> int:
    # the small offset keeps exact cubes such as 27000 from rounding down
    return int(max(20, np.floor(n ** (1.0 / 3.0) + 1e-9)))


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters; defaults are the noninformative simulation-study set-up.

    ``base_g`` and ``base_h`` are Beta(a, b) parameters of the base measures
    (uniform by default).
    """

    degree: int = 3
    k_max: int = 500
    theta_k: float = 0.01
    M_G: float = 1.0
    M_H: float = 1.0
    alpha_tau: float = 0.001
    beta_tau: float = 0.001
    L_G: int = 20
    L_H: int = 20
    base_g: tuple = (1.0, 1.0)
    base_h: tuple = (1.0, 1.0)
    family: str = "bspline"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if self.k_max < self.k_min:
            raise ValueError(f"k_max must be at least {self.k_min}")
        if not self.theta_k > 0:
            raise ValueError("theta_k must be positive")
        if not (self.M_G > 0 and self.M_H > 0):
            raise ValueError("DP precisions must be positive")
        if not (self.alpha_tau > 0 and self.beta_tau > 0):
            raise ValueError("inverse-gamma hyperparameters must be positive")
        if self.L_G < 1 or self.L_H < 1:
            raise ValueError("truncation levels must be at least 1")
        for a, b in (self.base_g, self.base_h):
            if not (a > 0 and b > 0):
                raise ValueError("base Beta parameters must be positive")

    @property
    def k_min(self) -> int:
        return self.degree + 1 if self.family == "bspline" else 1

    @property
    def k_support(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def log_k_normalizer(self) -> float:
        ks = self.k_support.astype(float)
        return float(special.logsumexp(-self.theta_k * ks**2))

    def log_pk(self, k) -> float:
        k = np.asarray(k)
        inside = (k >= self.k_min) & (k <= self.k_max)
        out = np.where(inside, -self.theta_k * k.astype(float) ** 2 - self.log_k_normalizer, -np.inf)
        return float(out) if out.ndim == 0 else out

    def pk(self) -> np.ndarray:
        """Prior pmf of k over :attr:`k_support`."""
        return np.exp(self.log_pk(self.k_support))

    def with_(self, **changes) -> "PriorConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SamplerState:
    v: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    k: int = 4
    tau: float = 1.0

    def __post_init__(self):
        for name in ("v", "z", "u", "x"):
            arr = np.array(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "tau", float(self.tau))

    def is_valid(self, cfg: PriorConfig) -> bool:
        arrays = (self.v, self.z, self.u, self.x)
        if any(np.any((a < 0) | (a > 1)) for a in arrays):
            return False
        if self.v.size != cfg.L_G or self.z.size != cfg.L_G + 1:
            return False
        if self.u.size != cfg.L_H or self.x.size != cfg.L_H + 1:
            return False
        return cfg.k_min <= self.k <= cfg.k_max and self.tau > 0 and np.isfinite(self.tau)

    def copy(self) -> "SamplerState":
        return SamplerState(self.v, self.z, self.u, self.x, self.k, self.tau)

    def __eq__(self, other):
        if not isinstance(other, SamplerState):
            return NotImplemented
        return (
            self.k == other.k
            and self.tau == other.tau
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in "vzux")
        )


def stick_masses(sticks) -> np.ndarray:
    """Stick-breaking masses ``(p_0, p_1, ..., p_L)``; ``p_0`` is the leftover."""
    v = np.asarray(sticks, dtype=float)
    if np.any((v < 0) | (v > 1)):
        raise ValueError("sticks must lie in [0, 1]")
    out = np.empty(v.size + 1)
    _kernels.stick_masses(v, out)
    return out


def _binned(masses, atoms, nbins):
    masses = np.asarray(masses, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    if masses.shape != atoms.shape:
        raise ValueError("masses and atoms must align")
    out = np.empty(nbins)
    _kernels.bin_masses(masses, atoms, nbins, out)
    return out


def weights_from_G(masses, atoms, k: int) -> np.ndarray:
    """Mass of the discrete measure in each bin ``((j-1)/k, j/k]``; atoms at 0 join bin 1."""
    if k < 1:
        raise ValueError("k must be positive")
    return _binned(masses, atoms, k)


def knot_diffs_from_H(masses, atoms, k: int, r: int) -> np.ndarray:
    """Internal knot widths from the knot measure, renormalized to sum to one."""
    if k <= r:
        raise ValueError("need k > r for at least one knot interval")
    d = _binned(masses, atoms, k - r)
    return d / d.sum()


def log_prior(state: SamplerState, cfg: PriorConfig) -> float:
    """Joint log prior density of a state; ``-inf`` outside the support."""
    if not state.is_valid(cfg):
        return -np.inf
    total = 0.0
    total += stats.beta.logpdf(state.v, 1.0, cfg.M_G).sum()
    total += stats.beta.logpdf(state.z, *cfg.base_g).sum()
    if cfg.family == "bspline":
        total += stats.beta.logpdf(state.u, 1.0, cfg.M_H).sum()
        total += stats.beta.logpdf(state.x, *cfg.base_h).sum()
    total += cfg.log_pk(state.k)
    total += stats.invgamma.logpdf(state.tau, cfg.alpha_tau, scale=cfg.beta_tau)
    return float(total) if np.isfinite(total) else -np.inf


def sample_prior_state(cfg: PriorConfig, rng, k: int | None = None, tau: float | None = None) -> SamplerState:
    """Draw sticks and atoms from the prior; ``k`` and ``tau`` from the prior unless given."""
    rng = np.random.default_rng(rng)
    v = rng.beta(1.0, cfg.M_G, size=cfg.L_G)
    z = rng.beta(*cfg.base_g, size=cfg.L_G + 1)
    u = rng.beta(1.0, cfg.M_H, size=cfg.L_H)
    x = rng.beta(*cfg.base_h, size=cfg.L_H + 1)
    if k is None:
        k = int(rng.choice(cfg.k_support, p=cfg.pk()))
    if tau is None:
        tau = cfg.beta_tau / max(rng.standard_gamma(cfg.alpha_tau), GAMMA_FLOOR)
    return SamplerState(v, z, u, x, k, tau)


def state_weights(state: SamplerState) -> np.ndarray:
    return weights_from_G(stick_masses(state.v), state.z, state.k)


def state_basis(state: SamplerState, cfg: PriorConfig) -> BsplineDensityBasis:
    if state.k <= cfg.degree:
        raise ValueError("need k > r for at least one knot interval")
    # build_knots renormalizes, so the raw bin masses give the same rounding
    # as the compiled evaluator
    d = _binned(stick_masses(state.u), state.x, state.k - cfg.degree)
    return BsplineDensityBasis.from_knots(build_knots(d, cfg.degree))


def state_to_psd(state: SamplerState, cfg: PriorConfig, omegas) -> np.ndarray:
    """``f(pi omega) = tau * s(omega)`` for the B-spline mixture of ``state``."""
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    s = eval_mixture(om, state_weights(state), state_basis(state, cfg))
    return state.tau * s


def bernstein_state_to_psd(state: SamplerState, cfg: PriorConfig, omegas) -> np.ndarray:
    """``tau * sum_j w_j Beta(omega; j, k - j + 1)``; the knot process is unused."""
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    w = state_weights(state)
    j = np.arange(1, state.k + 1)
    dens = stats.beta.pdf(om[:, None], j[None, :], state.k - j[None, :] + 1)
    return state.tau * (dens @ w)


def psd_for(state: SamplerState, cfg: PriorConfig, omegas) -> np.ndarray:
    fn = state_to_psd if cfg.family == "bspline" else bernstein_state_to_psd
    return fn(state, cfg, omegas)


def fast_psd(state: SamplerState, cfg: PriorConfig, omegas) -> np.ndarray:
    """Compiled equivalent of :func:`psd_for`, used on large posterior samples."""
    om = np.ascontiguousarray(np.atleast_1d(omegas), dtype=float)
    fam = _kernels.BSPLINE if cfg.family == "bspline" else _kernels.BERNSTEIN
    s = _kernels.evaluate(fam, state.v, state.z, state.u, state.x, state.k, cfg.degree, om)
    return state.tau * s
