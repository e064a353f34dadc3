"""Command line: ``bspline-psd {estimate,simulate,sunspot}``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import pipeline
from .pipeline import InputError, RunConfig

log = logging.getLogger("bspline_psd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# flag -> RunConfig field
FLAGS = {
    "--input": ("input", str),
    "--out": ("out", str),
    "--prior": ("prior", str),
    "--iters": ("iters", int),
    "--burnin": ("burnin", int),
    "--thin": ("thin", int),
    "--kmax": ("kmax", int),
    "--degree": ("degree", int),
    "--chains": ("chains", int),
    "--tmin": ("tmin", float),
    "--swap-interval": ("swap_interval", int),
    "--seed": ("seed", int),
    "--reps": ("reps", int),
    "--scenario": ("scenario", str),
    "--n": ("n", int),
    "--theta-k": ("theta_k", float),
    "--mg": ("mg", float),
    "--mh": ("mh", float),
    "--alpha-tau": ("alpha_tau", float),
    "--beta-tau": ("beta_tau", float),
    "--truncation": ("truncation", int),
    "--alpha": ("alpha", float),
    "--sampling-interval": ("sampling_interval", float),
    "--workers": ("workers", int),
    "--progress-every": ("progress_every", int),
}
SWITCHES = ("sqrt", "difference", "hann", "center", "log_band")

# verbs whose defaults differ from RunConfig's
VERB_DEFAULTS = {
    "sunspot": {"iters": 100_000, "burnin": 50_000, "thin": 10},
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bspline-psd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for verb, help_ in (
        ("estimate", "estimate the PSD of a series in a CSV file"),
        ("simulate", "AR(1)/AR(4) simulation study"),
        ("sunspot", "solar-cycle analysis of the bundled sunspot numbers"),
    ):
        p = sub.add_parser(verb, help=help_)
        p.add_argument("--config", help="file of 'key = value' lines; flags override it")
        p.add_argument("-v", "--verbose", action="store_true", help="progress lines on stderr")
        for flag, (dest, kind) in FLAGS.items():
            kw = {"dest": dest, "type": kind, "default": None}
            if dest == "prior":
                kw["choices"] = ("bspline", "bernstein")
            if dest == "scenario":
                kw["choices"] = sorted(pipeline.SCENARIOS)
            p.add_argument(flag, **kw)
        for name in SWITCHES:
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, action=argparse.BooleanOptionalAction, default=None)
    return parser


def config_from_args(args) -> RunConfig:
    values = dict(VERB_DEFAULTS.get(args.mode, {}))
    if args.config:
        values.update(pipeline.read_config_file(args.config))
    for dest in [d for d, _ in FLAGS.values()] + list(SWITCHES):
        val = getattr(args, dest)
        if val is not None:
            values[dest] = val
    values["mode"] = args.mode
    known = {f.name for f in dataclasses.fields(RunConfig)}
    return RunConfig(**{k: v for k, v in values.items() if k in known})


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
    except (UsageError, InputError, OSError) as err:
        print(f"bspline-psd: error: {err}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    if args.verbose and not cfg.progress_every:
        cfg = dataclasses.replace(cfg, progress_every=max(cfg.iters // 20, 1))
    try:
        return _run(cfg)
    finally:
        log.removeHandler(handler)


def _run(cfg: RunConfig) -> int:
    try:
        if cfg.mode == "estimate":
            res = pipeline.estimate(cfg)
            print(f"peak_frequency={res.peak_frequency:.6g} rows={len(res.summary.median)} out={cfg.out}")
        elif cfg.mode == "simulate":
            _, agg = pipeline.simulate_study(cfg)
            print(" ".join(f"{k}={v}" for k, v in agg.items()))
        else:
            res = pipeline.sunspot_demo(cfg)
            peak = res.peak_frequency
            print(f"peak_frequency={peak:.4f} period_years={1 / peak:.2f} out={cfg.out}")
    except InputError as err:
        print(f"bspline-psd: error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - any failure is a runtime failure
        print(f"bspline-psd: runtime failure: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
