"""Command-line front end.

    qmonitor run           --config exp.toml [--seed S] [--baseline] --out run.csv
    qmonitor ensemble      --config exp.toml [--runs N] [--baseline] [--parallel P] --out ens.csv
    qmonitor sweep         --config exp.toml [--runs N] [--parallel P] --out sweep.csv
    qmonitor noise-preview --config exp.toml --out noise.csv

Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures. ``QMONITOR_MAX_WORKERS`` caps parallelism when ``--parallel`` is not
given.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .analysis import FitError, baseline_decay_metrics
from .config import ConfigError, Experiment, build, load
from .experiment import ensemble_average, sweep_strength
from .monitor import simulate_runs
from .noise import spectral_slope, synthesize
from .output import TableWriter
from .povm import ImpossibleOutcomeError
from .seeding import MASK64, run_streams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("qmonitor")


def _apply_overrides(exp: Experiment, args) -> Experiment:
    raw = exp.raw
    if getattr(args, "seed", None) is not None:
        seed = int(args.seed) & MASK64
        raw["run"]["seed"] = seed
        raw["ensemble"]["master_seed"] = seed
        raw["sweep"]["master_seed"] = seed
        raw["preview"]["seed"] = seed
    if getattr(args, "runs", None) is not None:
        raw["ensemble"]["n_runs"] = int(args.runs)
        raw["sweep"]["n_runs"] = int(args.runs)
    if getattr(args, "baseline", False):
        raw["ensemble"]["baseline"] = True
    return build(raw)


def cmd_run(exp: Experiment, out, parallel=None) -> str:
    """Single-run table: outcomes, true and estimated Bloch vectors, fidelity."""
    cfg = exp.run
    baseline = exp.baseline
    batch = simulate_runs(cfg, [cfg.seed], measure=not baseline)
    rec = batch.record(0)
    tr = exp.rabi_period
    rows = []
    for k, t in enumerate(rec.times):
        outcome = int(rec.outcomes[k - 1]) if k > 0 and len(rec.outcomes) else None
        rows.append([t / tr, outcome, *rec.true_bloch[k], *rec.estimate_bloch[k], rec.fidelity[k]])
    w = TableWriter("run", exp.raw, _meta(exp))
    w.block(
        ["t_over_TR", "outcome", "sx_true", "sy_true", "sz_true", "sx_est", "sy_est", "sz_est", "fidelity"], rows
    )
    w.footer(
        {
            "seed": rec.seed,
            "baseline": "true" if baseline else "false",
            "noise_scale_alpha": rec.noise_scales["alpha"],
            "noise_scale_beta": rec.noise_scales["beta"],
        }
    )
    return w.write(out)


def cmd_ensemble(exp: Experiment, out, parallel=None) -> str:
    """Ensemble-mean table with the fit (or, for baselines, the decay) in the footer."""
    baseline = exp.baseline
    ens = ensemble_average(exp.ensemble, parallel=parallel, measure=not baseline)
    t = ens.times_tr
    rows = zip(t, ens.mean_fidelity, ens.se_fidelity, ens.mean_bloch[:, 0], ens.mean_bloch[:, 2])
    w = TableWriter("ensemble", exp.raw, _meta(exp))
    w.block(["t_over_TR", "mean_fidelity", "se_fidelity", "mean_sx", "mean_sz"], rows)
    footer = {"n_runs": ens.n_runs, "se_defined": "true" if ens.se_defined else "false"}
    if baseline:
        try:
            d = baseline_decay_metrics(t, ens.mean_bloch[:, 2])
            footer.update(
                {
                    "decay_ratio": d.decay_ratio,
                    "half_amplitude_time_TR": d.half_time,
                    "e_fold_time_TR": d.e_fold_time,
                }
            )
        except FitError as exc:
            footer["decay_note"] = str(exc)
    else:
        try:
            fit = ens.fit()
            footer.update(
                {
                    "fit_f0": fit.f0,
                    "fit_tau_e_TR": fit.tau_e,
                    "fit_rms_residual": fit.rms_residual,
                    "fit_converged": "true" if fit.converged else "false",
                    "fit_tau_identifiable": "true" if fit.tau_identifiable else "false",
                }
            )
        except FitError as exc:
            footer["fit_note"] = str(exc)
    w.footer(footer)
    return w.write(out)


def cmd_sweep(exp: Experiment, out, parallel=None) -> str:
    """One row per (measurement strength, noise level)."""
    points = sweep_strength(exp.sweep, parallel=parallel)
    tr = exp.rabi_period
    rows = [
        [
            p.gamma_m,
            p.delta_p,
            p.period / tr,
            p.noise_level[0],
            p.noise_level[1],
            p.f0,
            p.f0_se,
            p.convergence_time,
            p.convergence_convention,
        ]
        for p in points
    ]
    w = TableWriter("sweep", exp.raw, _meta(exp))
    w.block(["gamma_m", "delta_p", "tau", "d_beta", "d_alpha", "f0", "f0_se", "conv_time", "conv_convention"], rows)
    w.block(
        ["gamma_m", "d_beta", "d_alpha", "n_periods", "fit_f0", "fit_tau_e_TR", "fit_rms_residual"],
        [
            [p.gamma_m, p.noise_level[0], p.noise_level[1], p.n_periods, p.fit.f0, p.fit.tau_e, p.fit.rms_residual]
            for p in points
        ],
        name="fits",
    )
    return w.write(out)


def cmd_noise_preview(exp: Experiment, out, parallel=None) -> str:
    """Sample noise traces plus the band-averaged periodogram and its log-log slope."""
    pv = exp.raw["preview"]
    tr = exp.rabi_period
    units_to_internal = tr if exp.raw["drive"]["time_units"] == "T_R" else 1.0 / exp.run.drive.rabi_frequency
    window = float(pv["window"]) * units_to_internal
    samples = int(pv["samples"])
    n_real = int(pv["realizations"])
    if window <= 0 or samples < 2 or n_real < 1:
        raise ConfigError("preview needs window > 0, samples >= 2 and realizations >= 1")
    specs = {"alpha": exp.run.noise_alpha, "beta": exp.run.noise_beta}
    trajs = {name: [] for name in specs}
    for i in range(n_real):
        streams = run_streams((int(pv["seed"]) + i) & MASK64)
        trajs["alpha"].append(synthesize(specs["alpha"], window, streams[0]))
        trajs["beta"].append(synthesize(specs["beta"], window, streams[1]))

    t = np.arange(samples) * (window / samples)
    first = {name: trajs[name][0](t) for name in specs}
    w = TableWriter("noise-preview", exp.raw, _meta(exp))
    w.block(["t", "alpha", "beta"], zip(t / tr, first["alpha"], first["beta"]), name="trace")

    levels, slopes, centers = {}, {}, None
    for name in specs:
        try:
            slope, c, lv = spectral_slope(trajs[name], window, samples, int(pv["n_bands"]))
        except ValueError as exc:
            raise ConfigError(f"preview: {exc}") from None
        slopes[name], levels[name], centers = slope, lv, c
    w.block(["omega", "power_alpha", "power_beta"], zip(centers, levels["alpha"], levels["beta"]), name="spectrum")
    w.footer(
        {
            "slope_alpha": slopes["alpha"],
            "slope_beta": slopes["beta"],
            "rms_alpha": trajs["alpha"][0].rms(),
            "rms_beta": trajs["beta"][0].rms(),
        }
    )
    return w.write(out)


def _meta(exp: Experiment) -> dict:
    m = exp.run.measurement
    meta = {}
    if m.renormalized:
        meta["direction_raw"] = list(m.direction)
        meta["direction_used"] = [float(x) for x in m.axis]
    return meta


COMMANDS = {
    "run": cmd_run,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "noise-preview": cmd_noise_preview,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmonitor", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qmonitor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", default="-", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        p.add_argument("--parallel", type=int, help="worker processes for ensembles")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("ensemble", "sweep"):
            p.add_argument("--runs", type=int, help="override the number of runs")
        if name in ("run", "ensemble"):
            p.add_argument("--baseline", action="store_true", help="measurement-free evolution")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.parallel is not None and args.parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        exp = _apply_overrides(load(args.config), args)
        COMMANDS[args.command](exp, args.out, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ImpossibleOutcomeError, FitError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
