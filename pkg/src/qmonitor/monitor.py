"""Single monitoring runs: noisy evolution, unsharp measurements, estimator replay.

Each period the true state is propagated under drive plus noise and the
estimate under the drive alone; then one outcome is sampled from the true
state and the matching Kraus operator is applied to both. The estimator
never sees the noise or the true state, only the outcome record.

:func:`simulate_runs` is the batched kernel: every operation is elementwise
across runs, so a run's numbers depend only on its own seed and on the batch
it is simulated in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import seeding
from .dynamics import (
    DriveConfig,
    StepControl,
    drive_propagator,
    period_propagator,
    renormalize,
    su2_apply,
)
from .noise import GridTables, NoiseSpec, synthesize
from .povm import ImpossibleOutcomeError, KrausPair, MeasurementConfig, build_kraus
from .qubit import PureState, bloch_components, overlap_squared

# periods per block of precomputed noise propagators
BLOCK_PERIODS = 64


@dataclass(frozen=True)
class RunConfig:
    drive: DriveConfig = field(default_factory=DriveConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    noise_alpha: NoiseSpec = field(default_factory=NoiseSpec)
    noise_beta: NoiseSpec = field(default_factory=NoiseSpec)
    initial_state: PureState = field(default_factory=PureState.up)
    initial_estimate: PureState = field(default_factory=PureState.down)
    n_periods: int = 300
    step_control: StepControl = field(default_factory=StepControl)
    seed: int = 0

    def __post_init__(self):
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise ValueError(f"n_periods must be a positive integer, got {self.n_periods!r}")
        self.initial_state.check_normalized(1e-9)
        self.initial_estimate.check_normalized(1e-9)

    @property
    def period(self) -> float:
        return self.measurement.period

    @property
    def duration(self) -> float:
        return self.n_periods * self.measurement.period

    @property
    def noiseless(self) -> bool:
        return self.noise_alpha.is_zero and self.noise_beta.is_zero

    def times(self) -> np.ndarray:
        return np.arange(self.n_periods + 1) * self.measurement.period

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


@dataclass
class RunRecord:
    """Time series of one run, sampled at ``t = k tau`` for ``k = 0..N``.

    ``outcomes`` is empty for measurement-free runs. Bloch arrays have shape
    ``(N + 1, 3)``.
    """

    times: np.ndarray
    outcomes: np.ndarray
    true_bloch: np.ndarray
    estimate_bloch: np.ndarray
    fidelity: np.ndarray
    noise_scales: dict
    seed: int
    true_amplitudes: np.ndarray | None = None
    estimate_amplitudes: np.ndarray | None = None

    def __len__(self):
        return len(self.times)


@dataclass
class RunBatch:
    """Stacked records of several runs; leading axis indexes the run."""

    times: np.ndarray
    seeds: list
    outcomes: np.ndarray
    fidelity: np.ndarray
    true_bloch: np.ndarray | None
    estimate_bloch: np.ndarray | None
    alpha_scale: np.ndarray
    beta_scale: np.ndarray
    true_amplitudes: np.ndarray | None = None
    estimate_amplitudes: np.ndarray | None = None

    def __len__(self):
        return len(self.seeds)

    def record(self, i: int) -> RunRecord:
        return RunRecord(
            times=self.times,
            outcomes=self.outcomes[i],
            true_bloch=None if self.true_bloch is None else self.true_bloch[i],
            estimate_bloch=None if self.estimate_bloch is None else self.estimate_bloch[i],
            fidelity=self.fidelity[i],
            noise_scales={"alpha": float(self.alpha_scale[i]), "beta": float(self.beta_scale[i])},
            seed=self.seeds[i],
            true_amplitudes=None if self.true_amplitudes is None else self.true_amplitudes[i],
            estimate_amplitudes=None if self.estimate_amplitudes is None else self.estimate_amplitudes[i],
        )

    @classmethod
    def concatenate(cls, batches: list["RunBatch"]) -> "RunBatch":
        def cat(name):
            parts = [getattr(b, name) for b in batches]
            return None if parts[0] is None else np.concatenate(parts)

        return cls(
            times=batches[0].times,
            seeds=[s for b in batches for s in b.seeds],
            outcomes=cat("outcomes"),
            fidelity=cat("fidelity"),
            true_bloch=cat("true_bloch"),
            estimate_bloch=cat("estimate_bloch"),
            alpha_scale=cat("alpha_scale"),
            beta_scale=cat("beta_scale"),
            true_amplitudes=cat("true_amplitudes"),
            estimate_amplitudes=cat("estimate_amplitudes"),
        )


def kraus_branches(kraus: KrausPair, a, b):
    """Unnormalized post-measurement amplitudes and probabilities for both outcomes."""
    (m00, m01), (m10, m11) = kraus.m0
    a0, b0 = m00 * a + m01 * b, m10 * a + m11 * b
    (m00, m01), (m10, m11) = kraus.m1
    a1, b1 = m00 * a + m01 * b, m10 * a + m11 * b
    p0 = np.abs(a0) ** 2 + np.abs(b0) ** 2
    p1 = np.abs(a1) ** 2 + np.abs(b1) ** 2
    return (a0, b0, p0), (a1, b1, p1)


def condition_on(kraus: KrausPair, a, b, is_zero, branches=None):
    """Apply ``M0`` where ``is_zero`` holds and ``M1`` elsewhere, then renormalize."""
    (a0, b0, p0), (a1, b1, p1) = kraus_branches(kraus, a, b) if branches is None else branches
    p = np.where(is_zero, p0, p1)
    if np.any(p <= 0.0):
        raise ImpossibleOutcomeError("recorded outcome has zero probability for the state it is applied to")
    a_new = np.where(is_zero, a0, a1)
    b_new = np.where(is_zero, b0, b1)
    return renormalize(a_new, b_new)


def _estimator_step(ea, eb, pe, qe, kraus, is_zero, measure: bool, evolve: bool):
    if evolve:
        ea, eb = renormalize(*su2_apply(pe, qe, ea, eb))
    if measure:
        ea, eb = condition_on(kraus, ea, eb, is_zero)
    return ea, eb


def simulate_runs(
    config: RunConfig,
    seeds,
    *,
    measure: bool = True,
    estimate: str = "drive",
    haar_estimate: bool = False,
    record: str = "full",
) -> RunBatch:
    """Simulate one run per seed.

    Parameters
    ----------
    measure : bool
        ``False`` gives the measurement-free baseline.
    estimate : {"drive", "fixed"}
        Whether the estimate evolves under the known drive or stays put.
    haar_estimate : bool
        Draw each run's initial estimate uniformly on the Bloch sphere instead
        of using ``config.initial_estimate``.
    record : {"full", "fidelity"}
        ``"full"`` keeps Bloch vectors and amplitudes; ``"fidelity"`` keeps
        only the fidelity series (for long runs).
    """
    if estimate not in ("drive", "fixed"):
        raise ValueError(f"unknown estimate mode {estimate!r}")
    if record not in ("full", "fidelity"):
        raise ValueError(f"unknown record mode {record!r}")
    seeds = [int(s) for s in seeds]
    n_runs = len(seeds)
    n_periods = int(config.n_periods)
    tau = config.measurement.period
    window = n_periods * tau
    drive = config.drive
    n_sub = int(config.step_control.substeps_per_period)
    dt = tau / n_sub

    streams = [seeding.run_streams(s) for s in seeds]
    alphas = [synthesize(config.noise_alpha, window, st[seeding.STREAM_ALPHA]) for st in streams]
    betas = [synthesize(config.noise_beta, window, st[seeding.STREAM_BETA]) for st in streams]
    uniforms = (
        np.stack([st[seeding.STREAM_OUTCOMES].random(n_periods) for st in streams])
        if measure
        else np.zeros((n_runs, 0))
    )

    ta = np.full(n_runs, config.initial_state.a)
    tb = np.full(n_runs, config.initial_state.b)
    if haar_estimate:
        guesses = [PureState.haar_random(st[seeding.STREAM_GUESS]) for st in streams]
        ea = np.array([g.a for g in guesses])
        eb = np.array([g.b for g in guesses])
    else:
        ea = np.full(n_runs, config.initial_estimate.a)
        eb = np.full(n_runs, config.initial_estimate.b)

    kraus = build_kraus(config.measurement) if measure else None
    pe, qe = drive_propagator(tau, drive)
    evolve_estimate = estimate == "drive"

    noisy_alpha = not config.noise_alpha.is_zero
    noisy_beta = not config.noise_beta.is_zero
    if noisy_alpha:
        alpha_c = np.stack([tr.quadratures()[0] for tr in alphas], axis=1)
        alpha_s = np.stack([tr.quadratures()[1] for tr in alphas], axis=1)
    if noisy_beta:
        beta_c = np.stack([tr.quadratures()[0] for tr in betas], axis=1)
        beta_s = np.stack([tr.quadratures()[1] for tr in betas], axis=1)

    full = record == "full"
    n_rec = n_periods + 1
    fid = np.empty((n_runs, n_rec))
    outcomes = np.zeros((n_runs, n_periods if measure else 0), dtype=np.int8)
    if full:
        t_amp = np.empty((n_runs, n_rec, 2), dtype=complex)
        e_amp = np.empty((n_runs, n_rec, 2), dtype=complex)

    def store(k):
        fid[:, k] = overlap_squared(ea, eb, ta, tb)
        if full:
            t_amp[:, k, 0], t_amp[:, k, 1] = ta, tb
            e_amp[:, k, 0], e_amp[:, k, 1] = ea, eb

    store(0)
    for start in range(0, n_periods, BLOCK_PERIODS):
        stop = min(start + BLOCK_PERIODS, n_periods)
        nb = stop - start
        if noisy_alpha or noisy_beta:
            t_mid = (np.arange(start, stop)[:, None] * tau + (np.arange(n_sub)[None, :] + 0.5) * dt).ravel()
            omegas = alphas[0].omegas if noisy_alpha else betas[0].omegas
            tables = GridTables(omegas, t_mid)
            shape = (nb, n_sub, n_runs)
            if noisy_alpha:
                al = tables.sample(alpha_c, alpha_s).reshape(shape).transpose(1, 0, 2)
            else:
                al = np.zeros((n_sub, nb, n_runs))
            if noisy_beta:
                if not noisy_alpha or len(betas[0].omegas) != len(omegas) or np.any(betas[0].omegas != omegas):
                    tables = GridTables(betas[0].omegas, t_mid)
                be = tables.sample(beta_c, beta_s).reshape(shape).transpose(1, 0, 2)
            else:
                be = np.zeros((n_sub, nb, n_runs))
            P, Q = period_propagator(al, be, drive, dt)
        for j in range(nb):
            k = start + j
            if noisy_alpha or noisy_beta:
                ta, tb = renormalize(*su2_apply(P[j], Q[j], ta, tb))
            else:
                ta, tb = renormalize(*su2_apply(pe, qe, ta, tb))
            is_zero = None
            if measure:
                branches = kraus_branches(kraus, ta, tb)
                is_zero = uniforms[:, k] < branches[0][2]
                outcomes[:, k] = np.where(is_zero, 0, 1)
                ta, tb = condition_on(kraus, ta, tb, is_zero, branches)
            ea, eb = _estimator_step(ea, eb, pe, qe, kraus, is_zero, measure, evolve_estimate)
            store(k + 1)

    batch = RunBatch(
        times=config.times(),
        seeds=seeds,
        outcomes=outcomes,
        fidelity=fid,
        true_bloch=None,
        estimate_bloch=None,
        alpha_scale=np.array([tr.scale for tr in alphas]),
        beta_scale=np.array([tr.scale for tr in betas]),
    )
    if full:
        batch.true_amplitudes = t_amp
        batch.estimate_amplitudes = e_amp
        batch.true_bloch = np.stack(bloch_components(t_amp[..., 0], t_amp[..., 1]), axis=-1)
        batch.estimate_bloch = np.stack(bloch_components(e_amp[..., 0], e_amp[..., 1]), axis=-1)
    return batch


def _seed_from(config: RunConfig, rng) -> int:
    if rng is None:
        return int(config.seed) & seeding.MASK64
    if isinstance(rng, (int, np.integer)):
        return int(rng) & seeding.MASK64
    return int(rng.integers(0, 2**64, dtype=np.uint64))


def run_single(config: RunConfig, rng=None) -> RunRecord:
    """One monitoring run.

    ``rng`` may be a seed, a ``numpy.random.Generator`` (one 64-bit seed is
    drawn from it) or ``None`` to use ``config.seed``.
    """
    return simulate_runs(config, [_seed_from(config, rng)]).record(0)


def run_baseline(config: RunConfig, rng=None) -> RunRecord:
    """Measurement-free run on the same time grid; the estimate follows the bare drive."""
    return simulate_runs(config, [_seed_from(config, rng)], measure=False).record(0)


def replay_estimate(config: RunConfig, outcomes, initial_estimate: PureState | None = None) -> np.ndarray:
    """Rebuild the estimate trajectory from an outcome record alone.

    Returns amplitudes of shape ``(len(outcomes) + 1, 2)``.
    """
    outcomes = np.asarray(outcomes)
    if np.any((outcomes != 0) & (outcomes != 1)):
        raise ValueError("outcomes must be 0 or 1")
    start = config.initial_estimate if initial_estimate is None else initial_estimate
    kraus = build_kraus(config.measurement)
    pe, qe = drive_propagator(config.measurement.period, config.drive)
    ea = np.full(1, start.a)
    eb = np.full(1, start.b)
    out = np.empty((len(outcomes) + 1, 2), dtype=complex)
    out[0] = ea[0], eb[0]
    for k, n in enumerate(outcomes):
        ea, eb = _estimator_step(ea, eb, pe, qe, kraus, np.array([n == 0]), True, True)
        out[k + 1] = ea[0], eb[0]
    return out
