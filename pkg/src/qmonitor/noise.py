"""Classical noise fields as random-phase spectral sums.

A trajectory is

    xi(t) = scale * sum_i w_i cos(omega_i t + phi_i),   w_i = sqrt(P(omega_i) d_omega)

on a linear frequency grid between two cutoffs, with iid uniform phases.
``scale`` is fixed per realization so that the RMS of ``xi`` over the run
window equals the requested value.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

SPECTRA = ("one-over-f", "white")
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class NoiseSpec:
    spectrum: str = "one-over-f"
    amplitude: float = 1.0
    omega_min: float = 0.01
    omega_max: float = 10.0
    n_components: int = 200
    target_rms: float = 0.0

    def __post_init__(self):
        if self.spectrum not in SPECTRA:
            raise ValueError(f"unknown spectrum {self.spectrum!r}; expected one of {SPECTRA}")
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError(f"need 0 < omega_min < omega_max, got {self.omega_min!r}, {self.omega_max!r}")
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise ValueError(f"n_components must be a positive integer, got {self.n_components!r}")
        if not self.target_rms >= 0:
            raise ValueError(f"target_rms must be non-negative, got {self.target_rms!r}")
        if not self.amplitude > 0:
            raise ValueError(f"spectral amplitude must be positive, got {self.amplitude!r}")

    @property
    def is_zero(self) -> bool:
        return self.target_rms == 0

    def power(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.spectrum == "white":
            return np.full_like(omega, self.amplitude)
        return self.amplitude / omega

    def grid(self) -> tuple[np.ndarray, float]:
        """Component frequencies and their spacing."""
        n = int(self.n_components)
        omegas = np.linspace(self.omega_min, self.omega_max, n)
        d_omega = (self.omega_max - self.omega_min) / (n - 1) if n > 1 else 1.0
        return omegas, d_omega

    def weights(self) -> np.ndarray:
        omegas, d_omega = self.grid()
        return np.sqrt(self.power(omegas) * d_omega)


@dataclass(frozen=True)
class NoiseTrajectory:
    omegas: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)
    scale: float = 0.0
    window: float = 0.0

    @classmethod
    def zero(cls, window: float = 0.0) -> "NoiseTrajectory":
        empty = np.zeros(0)
        return cls(empty, empty, empty, 0.0, window)

    @property
    def n_components(self) -> int:
        return len(self.omegas)

    @property
    def is_zero(self) -> bool:
        return self.scale == 0 or self.n_components == 0

    @property
    def amplitudes(self) -> np.ndarray:
        return self.scale * self.weights

    def __call__(self, t):
        return evaluate(self, t)

    def quadratures(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients ``(c, s)`` with ``xi(t) = sum c cos(wt) - s sin(wt)``."""
        amp = self.amplitudes
        return amp * np.cos(self.phases), amp * np.sin(self.phases)

    def mean_square(self, window: float | None = None) -> float:
        """Exact time average of ``xi**2`` over ``[0, window]``."""
        window = self.window if window is None else window
        return self.scale**2 * _raw_mean_square(self.omegas, self.weights, self.phases, window)

    def rms(self, window: float | None = None) -> float:
        return float(np.sqrt(self.mean_square(window)))

    def to_table(self) -> str:
        """Text table (17 significant digits) sufficient for exact replay."""
        buf = io.StringIO()
        buf.write(f"# scale = {self.scale:.17g}\n")
        buf.write(f"# window = {self.window:.17g}\n")
        buf.write("omega,weight,phase\n")
        for w, a, p in zip(self.omegas, self.weights, self.phases):
            buf.write(f"{w:.17g},{a:.17g},{p:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_table(cls, text: str) -> "NoiseTrajectory":
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = float(value)
            elif line[0].isalpha():
                continue
            else:
                rows.append([float(v) for v in line.split(",")])
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), meta["scale"], meta["window"])


def _mean_cos(k, c, window):
    # average of cos(k t + c) over [0, window]
    half = k * window / 2.0
    return np.cos(c + half) * np.sinc(half / np.pi)


def _raw_mean_square(omegas, weights, phases, window) -> float:
    if len(omegas) == 0:
        return 0.0
    if window <= 0:
        return float(np.sum(weights * np.cos(phases)) ** 2)
    w = weights[:, None] * weights[None, :]
    diff = _mean_cos(omegas[:, None] - omegas[None, :], phases[:, None] - phases[None, :], window)
    total = _mean_cos(omegas[:, None] + omegas[None, :], phases[:, None] + phases[None, :], window)
    return float(0.5 * np.sum(w * (diff + total)))


def synthesize(spec: NoiseSpec, window: float, rng: np.random.Generator) -> NoiseTrajectory:
    """Draw one noise realization normalized to ``spec.target_rms`` over ``[0, window]``.

    The phases are always drawn, so a zero-RMS spec consumes the same random
    numbers as a nonzero one.
    """
    if not window > 0:
        raise ValueError(f"noise window must be positive, got {window!r}")
    omegas, _ = spec.grid()
    weights = spec.weights()
    phases = rng.uniform(0.0, TWO_PI, size=len(omegas))
    if spec.is_zero:
        return NoiseTrajectory(omegas, weights, phases, 0.0, float(window))
    raw = np.sqrt(_raw_mean_square(omegas, weights, phases, window))
    return NoiseTrajectory(omegas, weights, phases, float(spec.target_rms / raw), float(window))


def evaluate(traj: NoiseTrajectory, t):
    """``xi(t)`` by direct summation; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if traj.is_zero:
        return np.zeros_like(t) if t.ndim else 0.0
    phase = np.multiply.outer(t, traj.omegas) + traj.phases
    out = traj.scale * (np.cos(phase) @ traj.weights)
    return out if t.ndim else float(out)


class GridTables:
    """``cos(omega t)``, ``sin(omega t)`` on a fixed time grid.

    Every trajectory synthesized from one spec shares the frequency grid, so
    these tables are computed once and reused for a whole ensemble.
    """

    def __init__(self, omegas: np.ndarray, times: np.ndarray):
        arg = np.multiply.outer(np.asarray(times, dtype=float), omegas)
        self.times = np.asarray(times, dtype=float)
        self.cos = np.cos(arg)
        self.sin = np.sin(arg)

    def sample(self, c: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Noise on the grid for quadrature coefficients of shape ``(n_comp,)`` or ``(n_comp, R)``."""
        return self.cos @ c - self.sin @ s


def sample_on_grid(traj: NoiseTrajectory, times) -> np.ndarray:
    """Cached-table evaluation; agrees with :func:`evaluate` to rounding."""
    times = np.asarray(times, dtype=float)
    if traj.is_zero:
        return np.zeros_like(times)
    c, s = traj.quadratures()
    return GridTables(traj.omegas, times).sample(c, s)


def autocorrelation(traj: NoiseTrajectory, lag: float, window: float, samples: int = 20000) -> float:
    """Discretized time-average of ``xi(t) xi(t + lag)`` over ``t in [0, window - lag]``."""
    if not 0 <= lag < window:
        raise ValueError(f"need 0 <= lag < window, got lag={lag!r}, window={window!r}")
    t = np.linspace(0.0, window - lag, int(samples))
    return float(np.mean(evaluate(traj, t) * evaluate(traj, t + lag)))


def empirical_spectrum(
    traj: NoiseTrajectory, window: float, samples: int, tables: GridTables | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Hann-windowed periodogram in angular frequency.

    Normalized so that ``sum(power) * d_omega`` approximates the mean square.
    ``tables`` may carry precomputed grid tables for ``t = k * window / samples``.
    """
    samples = int(samples)
    if traj.n_components and samples < 2 * window * traj.omegas.max() / TWO_PI:
        raise ValueError(
            f"{samples} samples over window {window} give fewer than 2 per period of omega_max"
        )
    dt = window / samples
    t = np.arange(samples) * dt
    if traj.is_zero:
        x = np.zeros(samples)
    elif tables is not None:
        x = tables.sample(*traj.quadratures())
    else:
        x = evaluate(traj, t)
    taper = np.hanning(samples)
    spec = np.fft.rfft(x * taper)
    d_omega = TWO_PI / (samples * dt)
    power = 2.0 * np.abs(spec) ** 2 / (samples * np.sum(taper**2) * d_omega)
    omega = np.arange(len(spec)) * d_omega
    return omega[1:], power[1:]


def tone_bands(traj: NoiseTrajectory, n_bands: int = 12) -> list[tuple[float, float, int]]:
    """Roughly log-spaced bands whose edges sit halfway between synthesis tones.

    Returns ``(low, high, n_tones, center)`` with ``center`` the mean tone
    frequency inside the band.
    """
    omegas = np.asarray(traj.omegas)
    n = len(omegas)
    if n < 2:
        raise ValueError("band averaging needs at least two tones")
    d_omega = omegas[1] - omegas[0]
    idx = np.unique(np.round(np.geomspace(1, n + 1, n_bands + 1)).astype(int) - 1)
    bands = []
    for lo_i, hi_i in zip(idx[:-1], idx[1:]):
        lo = max(omegas[lo_i] - d_omega / 2, omegas[0] / 2)
        hi = omegas[hi_i - 1] + d_omega / 2
        bands.append((float(lo), float(hi), int(hi_i - lo_i), float(omegas[lo_i:hi_i].mean())))
    return bands


def band_average(omega, power, bands, d_omega_tone: float):
    """Band-integrated power divided by the band's nominal tone width.

    Returns ``(centers, mean_power)``.
    """
    omega = np.asarray(omega)
    power = np.asarray(power)
    d_omega = omega[1] - omega[0]
    centers, levels = [], []
    for lo, hi, count, center in bands:
        mask = (omega >= lo) & (omega < hi)
        centers.append(center)
        levels.append(power[mask].sum() * d_omega / (count * d_omega_tone))
    return np.array(centers), np.array(levels)


def loglog_slope(centers, levels) -> float:
    centers = np.asarray(centers)
    levels = np.asarray(levels)
    ok = np.isfinite(centers) & (centers > 0) & (levels > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(centers[ok]), np.log(levels[ok]), 1)[0])


def spectral_slope(trajs, window: float, samples: int, n_bands: int = 12):
    """Log-log slope of the band-averaged periodogram, averaged over realizations.

    Returns ``(slope, centers, levels)``.
    """
    trajs = list(trajs)
    ref = trajs[0]
    bands = tone_bands(ref, n_bands)
    d_tone = float(ref.omegas[1] - ref.omegas[0])
    tables = GridTables(ref.omegas, np.arange(int(samples)) * (window / int(samples)))
    total = None
    for traj in trajs:
        omega, power = empirical_spectrum(traj, window, samples, tables)
        centers, levels = band_average(omega, power, bands, d_tone)
        total = levels if total is None else total + levels
    levels = total / len(trajs)
    return loglog_slope(centers, levels), centers, levels
