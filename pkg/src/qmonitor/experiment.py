"""Ensembles of monitoring runs, strength sweeps and baseline statistics.

Runs are simulated in fixed chunks of consecutive run indices. A chunk's
content never depends on how many workers execute the ensemble, and results
are gathered in index order, so the averaged curves are bit-identical for any
degree of parallelism.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import seeding
from .analysis import (
    RISE_FRACTION,
    FidelityCurveFit,
    baseline_decay_metrics,
    crossing_time,
    fit_fidelity,
)
from .monitor import RunBatch, RunConfig, simulate_runs
from .povm import MeasurementConfig, measurement_strength, measurement_time

log = logging.getLogger(__name__)

CHUNK_SIZE = 250
PARALLEL_ENV = "QMONITOR_MAX_WORKERS"
FIT_RESIDUAL_LIMIT = 0.01


def default_parallelism() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get(PARALLEL_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return n


@dataclass(frozen=True)
class EnsembleConfig:
    template: RunConfig
    n_runs: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ValueError(f"n_runs must be a positive integer, got {self.n_runs!r}")

    def seeds(self) -> list[int]:
        return seeding.run_seeds(self.master_seed, int(self.n_runs))


@dataclass
class EnsembleResult:
    """Pointwise means and standard errors over an ensemble.

    Bloch means have shape ``(N + 1, 3)`` and are ``None`` when only
    fidelities were recorded. ``runs`` keeps the per-run data.
    """

    times: np.ndarray
    rabi_period: float
    n_runs: int
    mean_fidelity: np.ndarray
    se_fidelity: np.ndarray
    mean_bloch: np.ndarray | None
    se_bloch: np.ndarray | None
    runs: RunBatch

    @property
    def times_tr(self) -> np.ndarray:
        return self.times / self.rabi_period

    @property
    def se_defined(self) -> bool:
        return self.n_runs > 1

    def fit(self) -> FidelityCurveFit:
        """Saturating-exponential fit with time in Rabi periods."""
        return fit_fidelity(self.times_tr, self.mean_fidelity)

    def tail_fidelity(self, fraction: float = 0.2) -> tuple[float, float]:
        """Mean and standard error of per-run fidelities over the final ``fraction`` of the run."""
        n = max(1, int(round(fraction * (len(self.times) - 1))))
        per_run = self.runs.fidelity[:, -n:].mean(axis=1)
        se = per_run.std(ddof=1) / math.sqrt(len(per_run)) if len(per_run) > 1 else 0.0
        return float(per_run.mean()), float(se)


def _mean_se(values: np.ndarray):
    mean = values.mean(axis=0)
    if values.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])


def _simulate_chunk(args):
    config, seeds, kwargs = args
    return simulate_runs(config, seeds, **kwargs)


def simulate_ensemble(
    config: EnsembleConfig,
    *,
    parallel: int | None = None,
    chunk_size: int = CHUNK_SIZE,
    **kwargs,
) -> RunBatch:
    """All runs of an ensemble, in run-index order.

    Extra keyword arguments go to :func:`qmonitor.monitor.simulate_runs`.
    """
    seeds = config.seeds()
    tasks = [(config.template, seeds[i : i + chunk_size], kwargs) for i in range(0, len(seeds), chunk_size)]
    workers = default_parallelism() if parallel is None else max(1, int(parallel))
    workers = min(workers, len(tasks))
    if workers == 1:
        batches = [_simulate_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_simulate_chunk, tasks))
    return RunBatch.concatenate(batches)


def summarize(batch: RunBatch, rabi_period: float) -> EnsembleResult:
    mean_f, se_f = _mean_se(batch.fidelity)
    if batch.true_bloch is not None:
        mean_b, se_b = _mean_se(batch.true_bloch)
    else:
        mean_b = se_b = None
    return EnsembleResult(
        times=batch.times,
        rabi_period=rabi_period,
        n_runs=len(batch),
        mean_fidelity=mean_f,
        se_fidelity=se_f,
        mean_bloch=mean_b,
        se_bloch=se_b,
        runs=batch,
    )


def ensemble_average(config: EnsembleConfig, *, parallel: int | None = None, **kwargs) -> EnsembleResult:
    """Mean fidelity and mean true Bloch vector versus time, with standard errors."""
    batch = simulate_ensemble(config, parallel=parallel, **kwargs)
    return summarize(batch, config.template.drive.rabi_period)


def random_guess_fidelity(config: EnsembleConfig, *, parallel: int | None = None) -> tuple[float, float]:
    """Time-averaged fidelity of a fixed uniformly random guess against the noisy unmeasured state.

    Returns the ensemble mean and its standard error.
    """
    batch = simulate_ensemble(
        config, parallel=parallel, measure=False, estimate="fixed", haar_estimate=True, record="fidelity"
    )
    per_run = batch.fidelity.mean(axis=1)
    se = per_run.std(ddof=1) / math.sqrt(len(per_run)) if len(per_run) > 1 else 0.0
    return float(per_run.mean()), float(se)


@dataclass(frozen=True)
class SweepPoint:
    """One (strength, noise level) cell of a strength sweep.

    ``convergence_convention`` is ``"fit"`` when ``convergence_time`` is the
    fitted estimation time and ``"crossing"`` when it is the time the mean
    curve first reaches ``(1 - 1/e) f0``; ``f0`` is then the tail average.
    Times are in Rabi periods.
    """

    gamma_m: float
    delta_p: float
    period: float
    noise_level: tuple
    fit: FidelityCurveFit
    f0: float
    f0_se: float
    convergence_time: float
    convergence_convention: str
    n_periods: int


@dataclass(frozen=True)
class SweepConfig:
    """Grid of measurement settings crossed with noise levels.

    Run length is ``span_factor * tau_m`` clamped to the period limits; noisy
    rows use their own (lower) cap because their cost scales with substeps.
    The default noisy cap still spans one ``tau_m`` at ``delta_p = 0.02``,
    ``tau = T_R / 10`` and several periods of the slowest noise tone.
    """

    template: RunConfig
    strengths: tuple = ((0.4, 2 * math.pi / 10), (0.2, 2 * math.pi / 10), (0.1, 2 * math.pi / 10))
    noise_levels: tuple = ((0.0, 0.0), (0.05, 0.005), (0.1, 0.01))
    n_runs: int = 200
    master_seed: int = 0
    span_factor: float = 8.0
    min_periods: int = 300
    max_periods: int = 20000
    max_periods_noisy: int = 6000

    def periods_for(self, measurement: MeasurementConfig, noisy: bool) -> int:
        tau_m = measurement_time(measurement)
        wanted = math.ceil(self.span_factor * tau_m / measurement.period) if math.isfinite(tau_m) else self.max_periods
        cap = self.max_periods_noisy if noisy else self.max_periods
        return int(min(max(wanted, self.min_periods), cap))


def _with_noise(template: RunConfig, d_beta: float, d_alpha: float) -> RunConfig:
    return replace(
        template,
        noise_alpha=replace(template.noise_alpha, target_rms=float(d_alpha)),
        noise_beta=replace(template.noise_beta, target_rms=float(d_beta)),
    )


def sweep_point(ens: EnsembleResult, measurement: MeasurementConfig, noise_level, n_periods: int) -> SweepPoint:
    t = ens.times_tr
    fit = ens.fit()
    f0_tail, f0_se = ens.tail_fidelity()
    if fit.tau_identifiable and fit.rms_residual <= FIT_RESIDUAL_LIMIT:
        f0, conv, convention = fit.f0, fit.tau_e, "fit"
    else:
        f0 = f0_tail
        conv = crossing_time(t, ens.mean_fidelity, RISE_FRACTION * f0)
        convention = "crossing"
    return SweepPoint(
        gamma_m=measurement_strength(measurement),
        delta_p=measurement.delta_p,
        period=measurement.period,
        noise_level=tuple(float(x) for x in noise_level),
        fit=fit,
        f0=float(f0),
        f0_se=f0_se,
        convergence_time=float(conv),
        convergence_convention=convention,
        n_periods=n_periods,
    )


def sweep_strength(config: SweepConfig, *, parallel: int | None = None) -> list[SweepPoint]:
    """Ensemble, fit and summarize every (strength, noise level) pair.

    Each cell uses the same master seed, so noise levels are compared on
    matched random streams.
    """
    points = []
    for d_beta, d_alpha in config.noise_levels:
        noisy = bool(d_beta or d_alpha)
        for delta_p, period in config.strengths:
            measurement = replace(config.template.measurement, delta_p=float(delta_p), period=float(period))
            n_periods = config.periods_for(measurement, noisy)
            template = replace(
                _with_noise(config.template, d_beta, d_alpha), measurement=measurement, n_periods=n_periods
            )
            ens = ensemble_average(
                EnsembleConfig(template, config.n_runs, config.master_seed), parallel=parallel, record="fidelity"
            )
            point = sweep_point(ens, measurement, (d_beta, d_alpha), n_periods)
            log.info(
                "gamma_m=%.4g noise=(%g, %g): f0=%.4f conv=%.3g (%s)",
                point.gamma_m, d_beta, d_alpha, point.f0, point.convergence_time, point.convergence_convention,
            )
            points.append(point)
    return points


def baseline_decay(config: EnsembleConfig, span_tr: float | None = None, *, parallel: int | None = None):
    """Measurement-free ensemble and the decay of its mean ``<sigma_z>`` envelope.

    ``span_tr`` limits the envelope analysis to the first ``span_tr`` Rabi
    periods. Returns ``(EnsembleResult, DecayMetrics)`` with metric times in
    Rabi periods.
    """
    ens = ensemble_average(config, parallel=parallel, measure=False)
    metrics = baseline_decay_metrics(ens.times_tr, ens.mean_bloch[:, 2], span_tr)
    return ens, metrics

