"""Metropolis-within-Gibbs sampling of the Whittle pseudo-posterior.

One sweep updates every weight stick, weight atom, knot stick and knot atom
with a circular random-walk Metropolis step, then ``k`` with a mixed
uniform/Cauchy jump, then draws ``tau`` from its inverse-gamma conditional.
Tempered chains raise only the likelihood to the inverse temperature.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .prior import GAMMA_FLOOR, PriorConfig, SamplerState, fast_psd
from .spectra import Periodogram

logger = logging.getLogger(__name__)

BLOCKS = ("v", "z", "u", "x", "k")


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 40_000
    burn_in: int | None = None
    thin: int = 10
    seed: int = 0
    eps_scale: tuple = (1.0, 1.0, 1.0, 1.0)
    cauchy_weight: float = 0.25
    cauchy_scale: float = 3.0
    chains: int = 1
    t_min: float = 0.005
    swap_interval: int = 10
    swaps: bool = True
    progress_every: int = 0

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.iterations // 2)
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if not 0 < self.t_min <= 1:
            raise ValueError("t_min must lie in (0, 1]")
        if self.swap_interval < 1:
            raise ValueError("swap_interval must be at least 1")
        if not 0 <= self.cauchy_weight <= 1:
            raise ValueError("cauchy_weight must lie in [0, 1]")
        if not self.cauchy_scale > 0:
            raise ValueError("cauchy_scale must be positive")
        if len(self.eps_scale) != 4 or min(self.eps_scale) < 0:
            raise ValueError("eps_scale needs four nonnegative multipliers")

    @property
    def n_stored(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class ChainTrace:
    """Thinned post-burn-in output of one chain."""

    frequencies: np.ndarray
    iteration: np.ndarray
    psd: np.ndarray
    k: np.ndarray
    tau: np.ndarray
    loglik: np.ndarray
    v: np.ndarray
    z: np.ndarray
    u: np.ndarray
    x: np.ndarray
    proposed: dict
    accepted: dict
    inverse_temperature: float = 1.0
    seconds: float = field(default=0.0, compare=False)

    def __len__(self):
        return self.k.size

    def acceptance_rates(self) -> dict:
        return {b: self.accepted[b] / self.proposed[b] if self.proposed[b] else 0.0 for b in BLOCKS}

    def state(self, i: int) -> SamplerState:
        return SamplerState(self.v[i], self.z[i], self.u[i], self.x[i], self.k[i], self.tau[i])

    def states(self):
        for i in range(len(self)):
            yield self.state(i)


@dataclass
class TemperedResult:
    trace: ChainTrace
    inverse_temperatures: np.ndarray
    swap_proposed: np.ndarray
    swap_accepted: np.ndarray
    chain_traces: list | None = None

    def swap_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.swap_proposed > 0, self.swap_accepted / np.maximum(self.swap_proposed, 1), 0.0)


def epsilons(count: int, n: int, scale: float = 1.0) -> np.ndarray:
    """Proposal half-widths ``l / (l + 2 sqrt(n))`` for block positions ``l = 1..count``."""
    l = np.arange(1, count + 1, dtype=float)
    return scale * l / (l + 2.0 * np.sqrt(n))


def temperature_ladder(chains: int, t_min: float) -> np.ndarray:
    """Inverse temperatures ``t_min ** ((c - 1) / (C - 1))``; runs from 1 down to ``t_min``."""
    if chains == 1:
        return np.ones(1)
    delta = np.arange(chains) / (chains - 1)
    out = t_min**delta
    out[0], out[-1] = 1.0, t_min
    return out


def propose_circular(x: float, epsilon: float, rng) -> float:
    """Uniform draw on ``[x - eps, x + eps]`` wrapped onto the unit circle."""
    return float(_kernels.circular(float(x), float(epsilon), rng.random()))


def k_step(cfg: McmcConfig, rng, bound: int = 10**6) -> int:
    return int(_kernels.k_step(rng.random(), rng.random(), cfg.cauchy_weight, cfg.cauchy_scale, bound))


def propose_k(k: int, prior_cfg: PriorConfig, mcmc_cfg: McmcConfig, rng) -> int:
    """Candidate number of components; out-of-range jumps become the self-move ``k``."""
    cand = k + k_step(mcmc_cfg, rng, prior_cfg.k_max + 1)
    return cand if prior_cfg.k_min <= cand <= prior_cfg.k_max else k


def unit_density(state: SamplerState, cfg: PriorConfig, omegas) -> np.ndarray:
    return fast_psd(state, cfg, omegas) / state.tau


def gibbs_tau(pg: Periodogram, state: SamplerState, cfg: PriorConfig, rng, inverse_temperature: float = 1.0) -> float:
    """Draw tau from ``IG(alpha + t N, beta + t sum_l I_l / s(omega_l))``."""
    t = inverse_temperature
    shape = cfg.alpha_tau + t * len(pg)
    rate = cfg.beta_tau
    if t > 0 and len(pg):
        s = unit_density(state, cfg, pg.omegas)
        if not np.all(s > 0):
            raise ValueError("mixture density vanishes at a Fourier frequency")
        rate += t * float(np.sum(pg.ordinates / s))
    return rate / max(rng.standard_gamma(shape), GAMMA_FLOOR)


def _fpar(prior_cfg: PriorConfig, mcmc_cfg: McmcConfig, t: float) -> np.ndarray:
    return np.array(
        [
            prior_cfg.M_G,
            prior_cfg.M_H,
            prior_cfg.theta_k,
            prior_cfg.alpha_tau,
            prior_cfg.beta_tau,
            t,
            mcmc_cfg.cauchy_weight,
            mcmc_cfg.cauchy_scale,
            prior_cfg.log_k_normalizer,
            *prior_cfg.base_g,
            *prior_cfg.base_h,
        ]
    )


def _ipar(prior_cfg: PriorConfig) -> np.ndarray:
    fam = _kernels.BSPLINE if prior_cfg.family == "bspline" else _kernels.BERNSTEIN
    return np.array([fam, prior_cfg.degree, prior_cfg.k_min, prior_cfg.k_max], dtype=np.int64)


def uniforms_per_sweep(cfg: PriorConfig) -> int:
    return 2 * (2 * cfg.L_G + 1 + 2 * cfg.L_H + 1) + 3


class _Chain:
    """Mutable state, caches and random streams of a single chain."""

    def __init__(self, pg, prior_cfg, mcmc_cfg, seed, t, state=None):
        self.pg = pg
        self.prior_cfg = prior_cfg
        self.mcmc_cfg = mcmc_cfg
        self.t = float(t)
        init_ss, unif_ss, gam_ss = np.random.SeedSequence(seed).spawn(3)
        self.unif_rng = np.random.default_rng(unif_ss)
        self.gam_rng = np.random.default_rng(gam_ss)
        self.shape = prior_cfg.alpha_tau + self.t * len(pg)
        if state is None:
            state = initial_state(pg, prior_cfg, np.random.default_rng(init_ss))
        self.set_state(state)
        self.omegas = np.ascontiguousarray(pg.omegas)
        self.ords = np.ascontiguousarray(pg.ordinates)
        self.fpar = _fpar(prior_cfg, mcmc_cfg, self.t)
        self.ipar = _ipar(prior_cfg)
        n = pg.n
        sv, sz, su, sx = mcmc_cfg.eps_scale
        self.eps = (
            epsilons(prior_cfg.L_G, n, sv),
            epsilons(prior_cfg.L_G + 1, n, sz),
            epsilons(prior_cfg.L_H, n, su),
            epsilons(prior_cfg.L_H + 1, n, sx),
        )
        self.nu = uniforms_per_sweep(prior_cfg)
        self.counts = np.zeros((5, 2), dtype=np.int64)
        self.loglik = np.nan

    def set_state(self, state: SamplerState):
        self.v = state.v.copy()
        self.z = state.z.copy()
        self.u = state.u.copy()
        self.x = state.x.copy()
        self.kt = np.array([state.k], dtype=np.int64)
        self.taut = np.array([state.tau])

    def get_state(self) -> SamplerState:
        return SamplerState(self.v, self.z, self.u, self.x, int(self.kt[0]), float(self.taut[0]))

    def swap_with(self, other: "_Chain"):
        for name in ("v", "z", "u", "x", "kt", "taut", "loglik"):
            a, b = getattr(self, name), getattr(other, name)
            setattr(self, name, b)
            setattr(other, name, a)

    def advance(self, sweeps, store_idx, out):
        unif = self.unif_rng.random((sweeps, self.nu))
        gam = np.maximum(self.gam_rng.standard_gamma(self.shape, size=sweeps), GAMMA_FLOOR)
        self.loglik = _kernels.advance(
            self.v, self.z, self.u, self.x, self.kt, self.taut,
            self.omegas, self.ords, self.fpar, self.ipar, *self.eps,
            unif, gam, store_idx, *out, self.counts,
        )


def initial_state(pg: Periodogram, cfg: PriorConfig, rng, max_tries: int = 10_000) -> SamplerState:
    """Prior draw of sticks and atoms with ``k = min(r + 7, k_max)`` and tau at the mean ordinate.

    Redraws until the mixture density is positive at every Fourier frequency,
    so the starting log-likelihood is finite.
    """
    k0 = max(min(cfg.degree + 7, cfg.k_max), cfg.k_min)
    tau0 = float(np.mean(pg.ordinates)) if len(pg) and np.mean(pg.ordinates) > 0 else 1.0
    for _ in range(max_tries):
        v = rng.beta(1.0, cfg.M_G, size=cfg.L_G)
        z = rng.beta(*cfg.base_g, size=cfg.L_G + 1)
        u = rng.beta(1.0, cfg.M_H, size=cfg.L_H)
        x = rng.beta(*cfg.base_h, size=cfg.L_H + 1)
        state = SamplerState(v, z, u, x, k0, tau0)
        if not len(pg) or np.all(unit_density(state, cfg, pg.omegas) > 0):
            return state
    raise RuntimeError("could not find a starting state with positive density")


def _out_arrays(nstore, nf, cfg):
    return (
        np.empty((nstore, nf)),
        np.empty(nstore, dtype=np.int64),
        np.empty(nstore),
        np.empty(nstore),
        np.empty((nstore, cfg.L_G)),
        np.empty((nstore, cfg.L_G + 1)),
        np.empty((nstore, cfg.L_H)),
        np.empty((nstore, cfg.L_H + 1)),
    )


def _store_schedule(mcmc_cfg: McmcConfig):
    it = np.arange(1, mcmc_cfg.iterations + 1)
    keep = (it > mcmc_cfg.burn_in) & ((it - mcmc_cfg.burn_in) % mcmc_cfg.thin == 0)
    idx = np.full(it.size, -1, dtype=np.int64)
    idx[keep] = np.arange(keep.sum())
    return idx, it[keep]


def _make_trace(pg, chain, out, iters, seconds):
    psd, k, tau, ll, v, z, u, x = out
    proposed = {b: int(chain.counts[i, 0]) for i, b in enumerate(BLOCKS)}
    accepted = {b: int(chain.counts[i, 1]) for i, b in enumerate(BLOCKS)}
    return ChainTrace(pg.frequencies, iters, psd, k, tau, ll, v, z, u, x, proposed, accepted, chain.t, seconds)


def _log_progress(it, chains, total):
    c = chains[0]
    rates = " ".join(
        f"acc_{b}={c.counts[i, 1] / max(c.counts[i, 0], 1):.3f}" for i, b in enumerate(BLOCKS)
    )
    logger.info("iter=%d/%d k=%d tau=%.6g loglik=%.6g %s", it, total, c.kt[0], c.taut[0], c.loglik, rates)


def mh_sweep(state: SamplerState, pg: Periodogram, prior_cfg: PriorConfig, mcmc_cfg: McmcConfig,
             inverse_temperature: float, rng) -> SamplerState:
    """One full sweep from ``state`` using random numbers from ``rng``."""
    if not state.is_valid(prior_cfg):
        raise ValueError("invalid sampler state")
    chain = _Chain(pg, prior_cfg, mcmc_cfg, 0, inverse_temperature, state)
    unif = rng.random((1, chain.nu))
    gam = np.array([max(rng.standard_gamma(chain.shape), GAMMA_FLOOR)])
    out = _out_arrays(0, len(pg), prior_cfg)
    _kernels.advance(
        chain.v, chain.z, chain.u, chain.x, chain.kt, chain.taut,
        chain.omegas, chain.ords, chain.fpar, chain.ipar, *chain.eps,
        unif, gam, np.full(1, -1, dtype=np.int64), *out, chain.counts,
    )
    return chain.get_state()


def run_chain(pg: Periodogram, prior_cfg: PriorConfig, mcmc_cfg: McmcConfig,
              inverse_temperature: float = 1.0, seed: int | None = None,
              state: SamplerState | None = None, chunk: int = 1000) -> ChainTrace:
    """Run a single chain and keep the thinned post-burn-in sweeps.

    ``seed`` defaults to ``mcmc_cfg.seed``. Output is a deterministic
    function of the seed and configs.
    """
    seed = mcmc_cfg.seed if seed is None else seed
    start = time.perf_counter()
    chain = _Chain(pg, prior_cfg, mcmc_cfg, seed, inverse_temperature, state)
    store_idx, iters = _store_schedule(mcmc_cfg)
    out = _out_arrays(iters.size, len(pg), prior_cfg)
    every = mcmc_cfg.progress_every
    done = 0
    while done < mcmc_cfg.iterations:
        m = min(chunk, mcmc_cfg.iterations - done)
        if every:
            m = min(m, every - done % every)
        chain.advance(m, store_idx[done : done + m], out)
        done += m
        if every and done % every == 0:
            _log_progress(done, [chain], mcmc_cfg.iterations)
    return _make_trace(pg, chain, out, iters, time.perf_counter() - start)


def swap_log_ratio(loglik_i: float, loglik_j: float, t_i: float, t_j: float) -> float:
    """Log acceptance of exchanging states between chains ``i`` and ``j``.

    With only the likelihood tempered the priors cancel, leaving
    ``(t_i - t_j) * (loglik_j - loglik_i)``.
    """
    if t_i == t_j:
        return 0.0
    return (t_i - t_j) * (loglik_j - loglik_i)


def run_tempered(pg: Periodogram, prior_cfg: PriorConfig, mcmc_cfg: McmcConfig,
                 keep_all: bool = False) -> TemperedResult:
    """Parallel tempering over ``mcmc_cfg.chains`` replicas.

    Chain ``c`` (0-based) runs at inverse temperature ``ladder[c]`` with seed
    ``mcmc_cfg.seed + c``. Every ``swap_interval`` sweeps one adjacent pair,
    cycling ``(0,1), (1,2), ...``, proposes to exchange full states. Only the
    untempered chain is stored unless ``keep_all``.
    """
    C = mcmc_cfg.chains
    ladder = temperature_ladder(C, mcmc_cfg.t_min)
    if C < 2:
        trace = run_chain(pg, prior_cfg, mcmc_cfg)
        return TemperedResult(trace, ladder, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                              [trace] if keep_all else None)
    start = time.perf_counter()
    chains = [_Chain(pg, prior_cfg, mcmc_cfg, mcmc_cfg.seed + c, ladder[c]) for c in range(C)]
    swap_rng = np.random.default_rng(np.random.SeedSequence([mcmc_cfg.seed, 0x5EED]))
    store_idx, iters = _store_schedule(mcmc_cfg)
    nostore = np.full(store_idx.size, -1, dtype=np.int64)
    outs = [_out_arrays(iters.size, len(pg), prior_cfg) if (c == 0 or keep_all) else None for c in range(C)]
    dummy = _out_arrays(0, len(pg), prior_cfg)
    proposed = np.zeros(C - 1, dtype=np.int64)
    accepted = np.zeros(C - 1, dtype=np.int64)
    every = mcmc_cfg.progress_every
    n_swaps = 0
    done = 0
    while done < mcmc_cfg.iterations:
        m = min(mcmc_cfg.swap_interval, mcmc_cfg.iterations - done)
        sl = slice(done, done + m)
        for c, ch in enumerate(chains):
            if outs[c] is None:
                ch.advance(m, nostore[sl], dummy)
            else:
                ch.advance(m, store_idx[sl], outs[c])
        done += m
        if mcmc_cfg.swaps and m == mcmc_cfg.swap_interval:
            p = n_swaps % (C - 1)
            n_swaps += 1
            a, b = chains[p], chains[p + 1]
            log_rho = swap_log_ratio(a.loglik, b.loglik, a.t, b.t)
            proposed[p] += 1
            if np.log(swap_rng.random()) < log_rho:
                accepted[p] += 1
                a.swap_with(b)
        if every and done % every < mcmc_cfg.swap_interval:
            _log_progress(done, chains, mcmc_cfg.iterations)
            rates = " ".join(f"swap_{i}={accepted[i] / max(proposed[i], 1):.3f}" for i in range(C - 1))
            logger.info("iter=%d %s", done, rates)
    seconds = time.perf_counter() - start
    traces = [_make_trace(pg, ch, outs[c], iters, seconds) if outs[c] is not None else None
              for c, ch in enumerate(chains)]
    return TemperedResult(traces[0], ladder, proposed, accepted, traces if keep_all else None)
