"""Acceptance criteria 1-12.

Each test records one ``criterion N PASS|FAIL ...`` line, printed in the
terminal summary (and immediately with ``-s``). Tolerances are pinned here.
"""

import math
import os
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qmonitor.analysis import fit_fidelity, saturating_exponential
from qmonitor.cli import main
from qmonitor.config import load
from qmonitor.dynamics import DriveConfig, StepControl, midpoints, period_propagator, propagate_noisy, su2_apply, su2_matrix
from qmonitor.experiment import (
    EnsembleConfig,
    baseline_decay,
    ensemble_average,
    random_guess_fidelity,
    sweep_strength,
)
from qmonitor.monitor import RunConfig, simulate_runs
from qmonitor.noise import NoiseSpec, NoiseTrajectory, autocorrelation, evaluate, spectral_slope, synthesize
from qmonitor.output import data_lines
from qmonitor.povm import MeasurementConfig, build_kraus
from qmonitor.qubit import SIGMA_X, SIGMA_Z, PureState

from conftest import ACCEPTANCE_LINES, TR

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# pinned tolerances
ALGEBRA_TOL = 1e-12
NORM_TOL = 1e-9
ORACLE_TOL = 1e-10
ORDER_RATIO, ORDER_RTOL = 4.0, 0.2
NOISELESS_MEAN_AT_20, NOISELESS_FRACTION_AT_15, NOISELESS_RUN_LEVEL = 0.95, 0.80, 0.9
NOISY_F0, NOISY_F0_TOL = 0.98, 0.03
NOISY_TAU, NOISY_TAU_TOL = 3.7, 1.5
BASELINE_BAND = (0.3, 0.7)
BASELINE_SPAN_TR = 30.0
SWEEP_F0_NOISELESS_TOL = 0.02
SWEEP_WEAKEST_TOL = 0.1
SWEEP_SE_MULT = 2.0
GUESS_TOL = 0.02
ZENO_FLOOR = 0.8
STRONG_F0, STRONG_F0_TOL = 0.999, 0.005
STRONG_TAU, STRONG_TAU_TOL = 15.8, 6.0
FIT_EXACT_RTOL, FIT_NOISY_RTOL = 1e-6, 0.05
RMS_RTOL, SLOPE, SLOPE_TOL, C0_RTOL = 0.01, -1.0, 0.2, 0.01


def report(n, ok, detail):
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_operator_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    completeness = max(
        build_kraus(MeasurementConfig(rng.standard_normal(3), rng.uniform(), rng.uniform(0.01, 5))).completeness_error()
        for _ in range(1000)
    )
    drive = DriveConfig()
    tau = TR / 10
    n_sub = 32
    window = 1000 * tau
    alpha = synthesize(NoiseSpec(target_rms=0.005), window, rng)
    beta = synthesize(NoiseSpec(target_rms=0.05), window, rng)
    t_mid = np.concatenate([midpoints(k * tau, tau, n_sub) for k in range(1000)]).reshape(1000, n_sub).T
    p, q = period_propagator(alpha(t_mid), beta(t_mid), drive, tau / n_sub)
    unitarity = max(np.max(np.abs(su2_matrix(p[k], q[k]).conj().T @ su2_matrix(p[k], q[k]) - np.eye(2))) for k in range(1000))
    s = PureState.haar_random(rng)
    a, b = s.a, s.b
    for k in range(1000):
        a, b = su2_apply(p[k], q[k], a, b)
    norm_drift = abs(abs(a) ** 2 + abs(b) ** 2 - 1)
    elapsed = time.perf_counter() - start
    ok = completeness < ALGEBRA_TOL and unitarity < ALGEBRA_TOL and norm_drift < NORM_TOL and elapsed < 10
    report(
        1,
        ok,
        f"completeness {completeness:.1e}, unitarity {unitarity:.1e} (<{ALGEBRA_TOL:g}), "
        f"norm drift over 1000 periods {norm_drift:.1e} (<{NORM_TOL:g}), {elapsed:.1f} s (<10 s)",
    )


def _expm(h, t):
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.exp(-1j * w * t)) @ v.conj().T


def test_criterion_02_propagator_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    drive = DriveConfig()
    worst = 0.0
    for _ in range(50):
        ca, cb, tau = rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 3)
        const_a = NoiseTrajectory(np.array([0.0]), np.array([1.0]), np.array([0.0]), ca, 1.0)
        const_b = NoiseTrajectory(np.array([0.0]), np.array([1.0]), np.array([0.0]), cb, 1.0)
        s = PureState.haar_random(rng)
        got = propagate_noisy(s, 0.0, tau, drive, const_a, const_b, StepControl(64)).vector
        want = _expm((0.5 + ca) * SIGMA_X + cb * SIGMA_Z, tau) @ s.vector
        worst = max(worst, 1 - abs(np.vdot(want, got)))
    ratios = []
    for _ in range(10):
        tone = [
            NoiseTrajectory(
                np.array([0.0, rng.uniform(1, 10)]),
                np.array([rng.uniform(-0.2, 0.2), rng.uniform(0.05, 0.3)]),
                np.array([0.0, rng.uniform(0, 2 * math.pi)]),
                1.0,
                1.0,
            )
            for _ in range(2)
        ]
        s = PureState.haar_random(rng)
        r = {}
        for n in (16, 32, 64):
            v = propagate_noisy(s, 0.0, TR / 10, drive, tone[0], tone[1], StepControl(n))
            r[n] = np.array([2 * (np.conj(v.a) * v.b).real, 2 * (np.conj(v.a) * v.b).imag, abs(v.a) ** 2 - abs(v.b) ** 2])
        ratios.append(np.max(np.abs(r[16] - r[32])) / np.max(np.abs(r[32] - r[64])))
    elapsed = time.perf_counter() - start
    ratios = np.array(ratios)
    ok = worst < ORACLE_TOL and np.all(np.abs(ratios / ORDER_RATIO - 1) <= ORDER_RTOL) and elapsed < 10
    report(
        2,
        ok,
        f"expm oracle infidelity {worst:.1e} (<{ORACLE_TOL:g}), "
        f"halving ratios {ratios.min():.3f}..{ratios.max():.3f} (4 +- 20%), {elapsed:.1f} s",
    )


def test_criterion_03_noiseless_convergence():
    exp = load(CONFIGS / "noiseless_tracking.toml")
    ens = ensemble_average(replace(exp.ensemble, n_runs=100), record="fidelity")
    t = ens.times_tr
    assert t[-1] == pytest.approx(30.0)
    i20, i15 = np.argmin(np.abs(t - 20)), np.argmin(np.abs(t - 15))
    mean20 = ens.mean_fidelity[i20]
    frac15 = np.mean(ens.runs.fidelity[:, i15] > NOISELESS_RUN_LEVEL)
    ok = mean20 >= NOISELESS_MEAN_AT_20 and frac15 >= NOISELESS_FRACTION_AT_15
    report(
        3,
        ok,
        f"mean F(20 T_R) = {mean20:.4f} (>= {NOISELESS_MEAN_AT_20}), "
        f"runs with F > {NOISELESS_RUN_LEVEL} at 15 T_R: {frac15:.0%} (>= {NOISELESS_FRACTION_AT_15:.0%})",
    )


def test_criterion_04_central_numbers():
    exp = load(CONFIGS / "noisy_tracking.toml")
    assert exp.ensemble.n_runs == 1000 and exp.run.duration / TR >= 30 - 1e-9
    fit = ensemble_average(exp.ensemble, record="fidelity").fit()
    ok = abs(fit.f0 - NOISY_F0) <= NOISY_F0_TOL and abs(fit.tau_e - NOISY_TAU) <= NOISY_TAU_TOL
    report(
        4,
        ok,
        f"F0 = {fit.f0:.4f} ({NOISY_F0} +- {NOISY_F0_TOL}), tau_E = {fit.tau_e:.3f} T_R "
        f"({NOISY_TAU} +- {NOISY_TAU_TOL}), rms residual {fit.rms_residual:.4f}",
    )


def test_criterion_05_baseline_decay():
    exp = load(CONFIGS / "noisy_tracking.toml")
    template = replace(exp.run, n_periods=500)
    _, metrics = baseline_decay(EnsembleConfig(template, 1000, exp.ensemble.master_seed), span_tr=BASELINE_SPAN_TR)
    lo, hi = BASELINE_BAND
    ok = lo <= metrics.decay_ratio <= hi
    report(
        5,
        ok,
        f"envelope ratio at {BASELINE_SPAN_TR:g} T_R (50 T_R runs, 1000 runs) = {metrics.decay_ratio:.3f} "
        f"(in [{lo}, {hi}]), half-amplitude time {metrics.half_time:.1f} T_R",
    )


def test_criterion_06_sweep_trends():
    exp = load(CONFIGS / "strength_sweep.toml")
    sweep = replace(exp.sweep, n_runs=400)
    points = sweep_strength(sweep)
    gammas = sorted({p.gamma_m for p in points})
    assert gammas[-1] / gammas[0] >= 10
    rows = {}
    for p in points:
        rows.setdefault(p.noise_level, []).append(p)
    problems = []
    summary = []
    for level, row in rows.items():
        row = sorted(row, key=lambda p: -p.gamma_m)  # strongest first
        f0 = np.array([p.f0 for p in row])
        se = np.array([p.f0_se for p in row])
        if level == (0.0, 0.0):
            conv = np.array([p.convergence_time for p in row])
            if np.any(np.abs(f0 - 1) > SWEEP_F0_NOISELESS_TOL):
                problems.append(f"no-noise F0 off 1: {np.round(f0, 4).tolist()}")
            if np.any(np.diff(conv) <= 0):
                problems.append(f"convergence time not increasing: {np.round(conv, 2).tolist()}")
            summary.append(f"no noise F0 min {f0.min():.4f}, conv {conv[0]:.2f}->{conv[-1]:.1f} T_R")
        else:
            slack = SWEEP_SE_MULT * np.hypot(se[1:], se[:-1])
            if np.any(f0[1:] > f0[:-1] + slack):
                problems.append(f"{level}: F0 not monotone {np.round(f0, 3).tolist()}")
            if abs(f0[-1] - 0.5) > SWEEP_WEAKEST_TOL:
                problems.append(f"{level}: weakest F0 {f0[-1]:.3f} not within {SWEEP_WEAKEST_TOL} of 0.5")
            summary.append(f"{level} F0 {f0[0]:.3f}->{f0[-1]:.3f}")
    report(6, not problems, "; ".join(summary + problems))


def test_criterion_07_random_guess_floor():
    exp = load(CONFIGS / "noisy_tracking.toml")
    mean, se = random_guess_fidelity(exp.ensemble)
    ok = abs(mean - 0.5) <= GUESS_TOL
    report(7, ok, f"time-averaged F = {mean:.4f} +- {se:.4f} over 1000 runs (0.5 +- {GUESS_TOL})")


@pytest.mark.xfail(
    strict=True,
    reason="outcome-averaged dynamics gives <sigma_z>(3 T_R) = 0.22 at delta_p=0.9, tau=T_R/100; see decisions ledger",
)
def test_criterion_08_zeno_freeze():
    cfg = RunConfig(measurement=MeasurementConfig((0, 0, 1), 0.9, TR / 100), n_periods=300)
    z = simulate_runs(cfg, EnsembleConfig(cfg, 100, 8).seeds(), measure=True).true_bloch[:, :, 2].mean(axis=0)
    # exact outcome-averaged Bloch map for comparison
    p0 = (1 - 0.9) / 2
    c = 2 * math.sqrt(p0 * (1 - p0))
    th = TR / 100
    step = np.diag([c, c, 1.0]) @ np.array([[1, 0, 0], [0, math.cos(th), -math.sin(th)], [0, math.sin(th), math.cos(th)]])
    r = np.array([0.0, 0.0, 1.0])
    for _ in range(300):
        r = step @ r
    report(
        8,
        z.min() > ZENO_FLOOR,
        f"min mean <sigma_z> over 3 T_R = {z.min():.3f} (> {ZENO_FLOOR} required); "
        f"exact averaged map gives {r[2]:.3f} at 3 T_R",
    )


def test_criterion_09_strong_drive():
    exp = load(CONFIGS / "strong_drive.toml")
    assert exp.ensemble.n_runs == 1000
    fit = ensemble_average(exp.ensemble, record="fidelity").fit()
    ok = abs(fit.f0 - STRONG_F0) <= STRONG_F0_TOL and abs(fit.tau_e - STRONG_TAU) <= STRONG_TAU_TOL
    report(
        9,
        ok,
        f"F0 = {fit.f0:.4f} ({STRONG_F0} +- {STRONG_F0_TOL}), tau_E = {fit.tau_e:.2f} T_R "
        f"({STRONG_TAU} +- {STRONG_TAU_TOL})",
    )


def test_criterion_10_fit_recovery():
    start = time.perf_counter()
    t = np.linspace(0, 30, 301)
    exact = fit_fidelity(t, saturating_exponential(t, 0.9, 2.0))
    err_exact = max(abs(exact.f0 / 0.9 - 1), abs(exact.tau_e / 2.0 - 1))
    rng = np.random.default_rng(10)
    err_noisy = 0.0
    for _ in range(20):
        fit = fit_fidelity(t, saturating_exponential(t, 0.9, 2.0) + rng.normal(0, 0.01, t.size))
        err_noisy = max(err_noisy, abs(fit.f0 / 0.9 - 1), abs(fit.tau_e / 2.0 - 1))
    elapsed = time.perf_counter() - start
    ok = err_exact < FIT_EXACT_RTOL and err_noisy < FIT_NOISY_RTOL and elapsed < 1
    report(
        10,
        ok,
        f"exact-data rel. error {err_exact:.1e} (<{FIT_EXACT_RTOL:g}), "
        f"SD 0.01 noise worst rel. error {err_noisy:.3f} (<{FIT_NOISY_RTOL}), {elapsed:.2f} s",
    )


def test_criterion_11_noise_model():
    spec = NoiseSpec(target_rms=0.05)
    run_window = 30 * TR
    rng = np.random.default_rng(11)
    t = np.linspace(0, run_window, 40_001)
    rms_err = 0.0
    c0_err = 0.0
    for _ in range(20):
        traj = synthesize(spec, run_window, rng)
        x = evaluate(traj, t)
        rms = math.sqrt(trapezoid(x**2, t) / run_window)
        rms_err = max(rms_err, abs(rms / 0.05 - 1))
        c0_err = max(c0_err, abs(autocorrelation(traj, 0.0, run_window, 40_000) / rms**2 - 1))
    window = 600 * TR
    trajs = [synthesize(spec, window, rng) for _ in range(50)]
    slope, _, _ = spectral_slope(trajs, window, 32768)
    ok = rms_err < RMS_RTOL and abs(slope - SLOPE) <= SLOPE_TOL and c0_err < C0_RTOL
    report(
        11,
        ok,
        f"RMS error {rms_err:.2%} (<1%), periodogram slope {slope:.3f} (-1 +- {SLOPE_TOL}) over 50 realizations, "
        f"C(0)/RMS^2 error {c0_err:.2%}",
    )


def test_criterion_12_reproducibility(tmp_path):
    exp = load(CONFIGS / "noisy_tracking.toml")
    cfg = replace(exp.ensemble, template=replace(exp.run, n_periods=100), n_runs=1000)
    levels = sorted({1, 4, os.cpu_count() or 1})
    library = {}
    for p in levels:
        ens = ensemble_average(cfg, parallel=p)
        library[p] = ens.mean_fidelity.tobytes() + ens.mean_bloch.tobytes() + ens.se_fidelity.tobytes()
    src = tmp_path / "exp.toml"
    src.write_text((CONFIGS / "noisy_tracking.toml").read_text().replace("n_periods = 300", "n_periods = 100"))
    cli = {}
    for p in levels:
        out = tmp_path / f"ens_{p}.csv"
        assert main(["ensemble", "--config", str(src), "--parallel", str(p), "--out", str(out)]) == 0
        cli[p] = data_lines(out.read_text())
    ok = len(set(library.values())) == 1 and all(cli[p] == cli[1] for p in levels)
    report(12, ok, f"parallel levels {levels} (max = {os.cpu_count()}): library arrays and CLI data blocks byte-identical = {ok}")
