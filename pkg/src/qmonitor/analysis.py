"""Curve analytics: saturating-exponential fits, crossing times, decay envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RISE_FRACTION = 1.0 - math.exp(-1.0)


class FitError(ValueError):
    """The curve cannot be fitted at all (too short, flat zero, ...)."""


@dataclass(frozen=True)
class FidelityCurveFit:
    """Parameters of ``F(t) = f0 (1 - exp(-t / tau_e))``.

    ``tau_e`` is in the time unit of the fitted abscissa. It is ``nan`` when
    the rise happens before the first fitted sample and cannot be resolved.
    """

    f0: float
    tau_e: float
    rms_residual: float
    converged: bool = True
    tau_identifiable: bool = True
    iterations: int = 0

    def model(self, t):
        return saturating_exponential(t, self.f0, self.tau_e)


def saturating_exponential(t, f0: float, tau_e: float):
    return f0 * -np.expm1(-np.asarray(t, dtype=float) / tau_e)


def crossing_time(times, curve, level: float) -> float:
    """First time ``curve`` reaches ``level``, linearly interpolated; ``nan`` if never."""
    times = np.asarray(times, dtype=float)
    curve = np.asarray(curve, dtype=float)
    above = np.nonzero(curve >= level)[0]
    if len(above) == 0:
        return float("nan")
    i = above[0]
    if i == 0:
        return float(times[0])
    t0, t1, c0, c1 = times[i - 1], times[i], curve[i - 1], curve[i]
    return float(t0 + (level - c0) * (t1 - t0) / (c1 - c0))


def tail_mean(curve, fraction: float = 0.2) -> float:
    curve = np.asarray(curve, dtype=float)
    n = max(1, int(round(fraction * len(curve))))
    return float(np.mean(curve[-n:]))


def fit_fidelity(
    times,
    mean_fidelity,
    *,
    rtol: float = 1e-8,
    max_iter: int = 200,
    exclude_origin: bool = True,
) -> FidelityCurveFit:
    """Least-squares fit of the saturating exponential by damped Gauss-Newton.

    Starts from ``f0`` = mean of the final 20% of points and ``tau_e`` = first
    crossing of ``(1 - 1/e) f0``; the damping factor is raised whenever a
    step fails to lower the residual. ``f0`` is kept inside ``[0, 1]``.
    A sample at ``t = 0`` is dropped when ``exclude_origin`` is set.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(mean_fidelity, dtype=float)
    if t.shape != y.shape:
        raise FitError("times and fidelities differ in length")
    if exclude_origin and len(t) and t[0] == 0:
        t, y = t[1:], y[1:]
    if len(t) < 10:
        raise FitError(f"need at least 10 points to fit, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise FitError("times must be strictly increasing")
    if np.all(np.abs(y) < 1e-12):
        raise FitError("flat-zero curve carries no asymptote")

    f0 = float(np.clip(tail_mean(y), 0.0, 1.0))
    t_cross = crossing_time(t, y, RISE_FRACTION * f0)
    if t_cross <= t[0] or np.all(y >= RISE_FRACTION * f0):
        # rise is over before the first sample: only the plateau is identifiable
        resid = float(np.sqrt(np.mean((y - f0) ** 2)))
        return FidelityCurveFit(f0, float("nan"), resid, True, False, 0)
    tau = t_cross if np.isfinite(t_cross) else float(t[-1])

    def residuals(f, tau_):
        return saturating_exponential(t, f, tau_) - y

    def cost(f, tau_):
        r = residuals(f, tau_)
        return float(r @ r)

    # optimize log(tau) so the time constant stays positive
    params = np.array([f0, math.log(tau)])
    current = cost(params[0], math.exp(params[1]))
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f, tau_ = params[0], math.exp(params[1])
        e = np.exp(-t / tau_)
        r = f * (1.0 - e) - y
        jac = np.column_stack([1.0 - e, -f * e * t / tau_])
        jtj = jac.T @ jac
        grad = jac.T @ r
        while True:
            step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-300), -grad)
            trial = params + step
            trial[0] = min(max(trial[0], 0.0), 1.0)
            trial_cost = cost(trial[0], math.exp(trial[1]))
            if trial_cost <= current:
                lam = max(lam / 3.0, 1e-12)
                break
            lam *= 4.0
            if lam > 1e12:
                trial, trial_cost = params, current
                break
        delta = np.abs(trial - params) / np.maximum(np.abs(params), 1e-12)
        params, current = trial, trial_cost
        if np.all(delta < rtol):
            converged = True
            break

    f0, tau = float(params[0]), math.exp(params[1])
    resid = float(np.sqrt(np.mean(residuals(f0, tau) ** 2)))
    return FidelityCurveFit(f0, tau, resid, converged, True, it)


@dataclass(frozen=True)
class DecayMetrics:
    """Envelope decay of an ensemble-mean Rabi oscillation.

    Times are ``nan`` when the envelope never falls that far.
    """

    decay_ratio: float
    half_time: float
    e_fold_time: float
    initial_envelope: float
    final_envelope: float
    extrema_times: np.ndarray
    extrema_values: np.ndarray


def oscillation_extrema(times, signal):
    """Interior local extrema of ``|signal|`` refined by three-point parabolas."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(signal, dtype=float)
    mag = np.abs(s)
    ts, vs = [], []
    for i in range(1, len(s) - 1):
        if mag[i] >= mag[i - 1] and mag[i] > mag[i + 1]:
            y0, y1, y2 = s[i - 1], s[i], s[i + 1]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            shift = min(max(shift, -1.0), 1.0)
            h = t[i + 1] - t[i]
            ts.append(t[i] + shift * h)
            vs.append(abs(y1 - 0.25 * (y0 - y2) * shift))
    return np.array(ts), np.array(vs)


def baseline_decay_metrics(times, mean_sz, span: float | None = None) -> DecayMetrics:
    """Decay ratio and characteristic times of the ``<sigma_z>`` envelope.

    Only extrema at or before ``span`` count when it is given. The ratio
    compares the last extremum against the first.
    """
    t_ext, v_ext = oscillation_extrema(times, mean_sz)
    if span is not None:
        keep = t_ext <= span
        t_ext, v_ext = t_ext[keep], v_ext[keep]
    if len(t_ext) < 4:
        raise FitError(f"need at least 4 oscillation extrema, found {len(t_ext)}")
    initial, final = float(v_ext[0]), float(v_ext[-1])
    return DecayMetrics(
        decay_ratio=final / initial,
        half_time=_envelope_crossing(t_ext, v_ext, 0.5 * initial),
        e_fold_time=_envelope_crossing(t_ext, v_ext, initial / math.e),
        initial_envelope=initial,
        final_envelope=final,
        extrema_times=t_ext,
        extrema_values=v_ext,
    )


def _envelope_crossing(t, v, level):
    below = np.nonzero(v < level)[0]
    if len(below) == 0:
        return float("nan")
    i = below[0]
    if i == 0:
        return float(t[0])
    return float(t[i - 1] + (v[i - 1] - level) * (t[i] - t[i - 1]) / (v[i - 1] - v[i]))
