"""End-to-end runs behind the command line: estimate, simulate, sunspot."""

from __future__ import annotations

import csv
import dataclasses
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__, spectra
from .prior import PriorConfig, default_truncation
from .sampler import McmcConfig, run_tempered
from .summary import PsdSamples, covered, iae, summarize, write_summary_csv

logger = logging.getLogger(__name__)

SCENARIOS = {"ar1": spectra.AR1, "ar4": spectra.AR4}
STUDY_SIZES = (128, 256, 512)


class InputError(ValueError):
    """Bad input file or configuration value."""


@dataclass
class RunConfig:
    mode: str = "estimate"
    input: str | None = None
    out: str = "out"
    prior: str = "bspline"
    degree: int = 3
    kmax: int = 500
    theta_k: float = 0.01
    mg: float = 1.0
    mh: float = 1.0
    alpha_tau: float = 0.001
    beta_tau: float = 0.001
    truncation: int | None = None
    iters: int = 40_000
    burnin: int | None = None
    thin: int = 10
    chains: int = 1
    tmin: float = 0.005
    swap_interval: int = 10
    seed: int = 0
    alpha: float = 0.1
    log_band: bool = False
    sqrt: bool = False
    difference: bool = False
    center: bool = True
    hann: bool = False
    sampling_interval: float = 1.0
    reps: int = 50
    scenario: str = "ar4"
    n: int = 256
    workers: int = 1
    progress_every: int = 0

    def __post_init__(self):
        if self.mode not in ("estimate", "simulate", "sunspot"):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.prior not in ("bspline", "bernstein"):
            raise InputError("prior must be bspline or bernstein")
        if self.scenario not in SCENARIOS:
            raise InputError(f"scenario must be one of {sorted(SCENARIOS)}")
        if self.n < spectra.MIN_LENGTH:
            raise InputError(f"n must be at least {spectra.MIN_LENGTH}")
        if self.reps < 1 or self.workers < 1:
            raise InputError("reps and workers must be positive")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if not self.sampling_interval > 0:
            raise InputError("sampling_interval must be positive")

    def prior_config(self, n: int) -> PriorConfig:
        L = self.truncation or default_truncation(n)
        try:
            return PriorConfig(
                degree=self.degree, k_max=self.kmax, theta_k=self.theta_k, M_G=self.mg, M_H=self.mh,
                alpha_tau=self.alpha_tau, beta_tau=self.beta_tau, L_G=L, L_H=L, family=self.prior,
            )
        except ValueError as err:
            raise InputError(str(err)) from err

    def mcmc_config(self, seed: int | None = None) -> McmcConfig:
        try:
            return McmcConfig(
                iterations=self.iters, burn_in=self.burnin, thin=self.thin,
                seed=self.seed if seed is None else seed, chains=self.chains, t_min=self.tmin,
                swap_interval=self.swap_interval, progress_every=self.progress_every,
            )
        except ValueError as err:
            raise InputError(str(err)) from err


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name, text):
    kind = _FIELD_TYPES[name]
    text = text.strip()
    if "bool" in kind:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InputError(f"{name}: expected a boolean, got {text!r}")
    if "None" in kind and text.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError as err:
        raise InputError(f"{name}: cannot parse {text!r}") from err
    return text


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (p.strip() for p in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise InputError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, val)
    return values


def load_series(path, sampling_interval: float = 1.0) -> spectra.TimeSeries:
    """Single-column CSV of reals with an optional ``value`` header."""
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    values = []
    for lineno, line in enumerate(lines, 1):
        cell = line.split(",")[0].strip()
        if not cell:
            continue
        if lineno == 1 and cell.lower() == "value":
            continue
        try:
            val = float(cell)
        except ValueError:
            raise InputError(f"{path}: line {lineno}: not a number: {cell!r}") from None
        if not np.isfinite(val):
            raise InputError(f"{path}: line {lineno}: non-finite value")
        values.append(val)
    if len(values) < spectra.MIN_LENGTH:
        raise InputError(f"{path}: need at least {spectra.MIN_LENGTH} values, found {len(values)}")
    return spectra.TimeSeries(np.array(values), sampling_interval)


def sunspot_series() -> spectra.TimeSeries:
    """Annual mean sunspot numbers 1700-1987 (288 values)."""
    ref = resources.files("bspline_psd") / "data" / "sunspots.csv"
    with resources.as_file(ref) as path:
        return load_series(path, 1.0)


def preprocess(ts: spectra.TimeSeries, cfg: RunConfig) -> spectra.TimeSeries:
    """sqrt, then differencing, then mean-centering, then the Hann window."""
    if cfg.sqrt:
        ts = spectra.sqrt_transform(ts)
    if cfg.difference:
        ts = spectra.difference(ts)
    if cfg.center:
        ts = spectra.mean_center(ts)
    if cfg.hann:
        ts = spectra.hann_window(ts)
    return ts


@dataclass
class EstimateResult:
    summary: object
    trace: object
    periodogram: spectra.Periodogram
    swap_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def peak_frequency(self) -> float:
        """Frequency (cycles per unit time) of the largest posterior median ordinate."""
        return float(self.periodogram.cycles[int(np.argmax(self.summary.median))])


def fit_periodogram(pg, cfg: RunConfig, seed: int | None = None) -> EstimateResult:
    prior = cfg.prior_config(pg.n)
    mcmc = cfg.mcmc_config(seed)
    result = run_tempered(pg, prior, mcmc)
    trace = result.trace
    summary = summarize(PsdSamples(pg.frequencies, trace.psd), cfg.alpha, trace.k, trace.tau, cfg.log_band)
    return EstimateResult(summary, trace, pg, result.swap_rates())


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iter", "k", "tau", "loglik"))
        for row in zip(trace.iteration, trace.k, trace.tau, trace.loglik):
            w.writerow((int(row[0]), int(row[1]), _fmt(row[2]), _fmt(row[3])))


def write_manifest(path, cfg: RunConfig, extra: dict | None = None):
    lines = [f"{k} = {_fmt(v) if v is not None else 'none'}" for k, v in dataclasses.asdict(cfg).items()]
    lines += [
        f"version = {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
        f"numba = {numba.__version__}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _check_finite(res: EstimateResult):
    s = res.summary
    arrays = (s.median, s.lo_point, s.hi_point, s.lo_unif, s.hi_unif, res.trace.tau)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise RuntimeError("non-finite values in posterior output")


def estimate(cfg: RunConfig, ts: spectra.TimeSeries | None = None) -> EstimateResult:
    """Preprocess, sample and summarize; writes summary.csv, trace.csv and manifest.txt."""
    if ts is None:
        if not cfg.input:
            raise InputError("estimate needs an input file")
        ts = load_series(cfg.input, cfg.sampling_interval)
    ts = preprocess(ts, cfg)
    pg = spectra.periodogram(ts, require_centered=cfg.center and not cfg.hann)
    start = time.perf_counter()
    res = fit_periodogram(pg, cfg)
    logger.info("done seconds=%.2f stored=%d", time.perf_counter() - start, len(res.trace))
    _check_finite(res)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(out / "summary.csv", res.summary, pg.cycles)
    write_trace_csv(out / "trace.csv", res.trace)
    extra = {"n": len(ts), "peak_frequency": res.peak_frequency}
    write_manifest(out / "manifest.txt", cfg, extra)
    return res


def replication_seeds(master: int, rep: int) -> tuple[int, int]:
    """(data seed, sampler seed) for one replication; independent of worker order."""
    data_ss, mcmc_ss = np.random.SeedSequence([master, rep]).spawn(2)
    return int(data_ss.generate_state(1)[0]), int(mcmc_ss.generate_state(1)[0])


def simulate_replication(cfg: RunConfig, rep: int) -> dict:
    model = SCENARIOS[cfg.scenario]
    data_seed, mcmc_seed = replication_seeds(cfg.seed, rep)
    ts = spectra.mean_center(spectra.simulate_ar(model, cfg.n, data_seed))
    pg = spectra.periodogram(ts)
    res = fit_periodogram(pg, cfg, mcmc_seed)
    s = res.summary
    truth = lambda lam: spectra.ar_psd(model, lam)
    return {
        "rep": rep,
        "iae": iae(pg.frequencies, s.median, truth),
        "covered": int(covered(truth, s.lo_unif, s.hi_unif, pg.frequencies)),
        "k_median": float(np.median(res.trace.k)),
        "zeta": s.zeta,
    }


def _run_rep(args):
    cfg, rep = args
    return simulate_replication(cfg, rep)


REP_COLUMNS = ("rep", "iae", "covered", "k_median", "zeta")
AGG_COLUMNS = ("scenario", "n", "prior", "reps", "iters", "median_iae", "coverage")


def aggregate(rows, cfg: RunConfig) -> dict:
    return {
        "scenario": cfg.scenario,
        "n": cfg.n,
        "prior": cfg.prior,
        "reps": len(rows),
        "iters": cfg.iters,
        "median_iae": float(np.median([r["iae"] for r in rows])),
        "coverage": float(np.mean([r["covered"] for r in rows])),
    }


def simulate_study(cfg: RunConfig) -> tuple[list, dict]:
    """AR simulation study; writes replications.csv, aggregate.csv and manifest.txt.

    Replication ``i`` uses seeds derived from ``(cfg.seed, i)`` only, so
    different prior families see the same realizations.
    """
    jobs = [(cfg, rep) for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_rep, jobs))
    else:
        rows = []
        for job in jobs:
            rows.append(_run_rep(job))
            logger.info("rep=%d iae=%.4f covered=%d", job[1], rows[-1]["iae"], rows[-1]["covered"])
    rows.sort(key=lambda r: r["rep"])
    agg = aggregate(rows, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "replications.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in REP_COLUMNS])
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_COLUMNS)
        w.writerow([_fmt(agg[c]) for c in AGG_COLUMNS])
    write_manifest(out / "manifest.txt", cfg)
    return rows, agg


def read_replications(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{"rep": int(r["rep"]), "iae": float(r["iae"]), "covered": int(r["covered"]),
                 "k_median": float(r["k_median"]), "zeta": float(r["zeta"])} for r in reader]


def sunspot_demo(cfg: RunConfig) -> EstimateResult:
    """Square root and mean-centre the sunspot numbers, then estimate."""
    cfg = dataclasses.replace(cfg, mode="sunspot", sqrt=True, center=True, difference=False,
                              hann=False, sampling_interval=1.0)
    res = estimate(cfg, sunspot_series())
    peak = res.peak_frequency
    logger.info("peak_frequency=%.4f period_years=%.2f", peak, 1.0 / peak)
    return res

