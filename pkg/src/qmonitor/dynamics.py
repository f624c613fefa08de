"""Evolution under the drive ``(Omega_R/2) sigma_x`` plus classical noise.

Unitaries here are SU(2) elements stored as the pair ``(p, q)`` of

    U = [[p, q], [-conj(q), conj(p)]]

which keeps batched products cheap. The time-ordered exponential over one
measurement period is a product of ``n_sub`` closed-form rotations, each with
the Hamiltonian frozen at the sub-interval midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseTrajectory, evaluate
from .qubit import PureState


@dataclass(frozen=True)
class DriveConfig:
    rabi_frequency: float = 1.0

    def __post_init__(self):
        if not self.rabi_frequency > 0:
            raise ValueError(f"rabi_frequency must be positive, got {self.rabi_frequency!r}")

    @property
    def rabi_period(self) -> float:
        return 2.0 * np.pi / self.rabi_frequency


@dataclass(frozen=True)
class StepControl:
    substeps_per_period: int = 32

    def __post_init__(self):
        if int(self.substeps_per_period) != self.substeps_per_period or self.substeps_per_period < 1:
            raise ValueError(f"substeps_per_period must be a positive integer, got {self.substeps_per_period!r}")


def su2_step(hx, hz, dt):
    """``exp(-i dt (hx sigma_x + hz sigma_z))`` as ``(p, q)``."""
    hx = np.asarray(hx, dtype=float)
    hz = np.asarray(hz, dtype=float)
    h = np.hypot(hx, hz)
    theta = h * dt
    # sin(theta)/h, finite as h -> 0
    k = dt * np.sinc(theta / np.pi)
    return np.cos(theta) - 1j * k * hz, -1j * k * hx


def su2_compose(p_later, q_later, p_earlier, q_earlier):
    """Product ``U_later @ U_earlier``."""
    p = p_later * p_earlier - q_later * np.conj(q_earlier)
    q = p_later * q_earlier + q_later * np.conj(p_earlier)
    return p, q


def su2_apply(p, q, a, b):
    return p * a + q * b, -np.conj(q) * a + np.conj(p) * b


def su2_matrix(p, q) -> np.ndarray:
    return np.array([[p, q], [-np.conj(q), np.conj(p)]], dtype=complex)


def renormalize(a, b):
    norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    return a / norm, b / norm


def midpoints(t0: float, tau: float, n_sub: int) -> np.ndarray:
    dt = tau / n_sub
    return t0 + (np.arange(n_sub) + 0.5) * dt


def period_propagator(alpha_mid, beta_mid, drive: DriveConfig, dt: float):
    """Ordered product over axis 0 of midpoint-frozen steps.

    ``alpha_mid`` and ``beta_mid`` have shape ``(n_sub, ...)``; trailing axes
    are batched.
    """
    hx = drive.rabi_frequency / 2.0 + np.asarray(alpha_mid, dtype=float)
    hz = np.broadcast_to(np.asarray(beta_mid, dtype=float), hx.shape)
    p, q = su2_step(hx[0], hz[0], dt)
    for j in range(1, hx.shape[0]):
        pj, qj = su2_step(hx[j], hz[j], dt)
        p, q = su2_compose(pj, qj, p, q)
    return p, q


def drive_propagator(tau: float, drive: DriveConfig):
    """Exact rotation about x by angle ``Omega_R * tau``."""
    half = drive.rabi_frequency * tau / 2.0
    return np.cos(half) + 0j, -1j * np.sin(half)


def propagate_noisy(
    state: PureState,
    t0: float,
    tau: float,
    drive: DriveConfig,
    alpha: NoiseTrajectory,
    beta: NoiseTrajectory,
    ctrl: StepControl = StepControl(),
) -> PureState:
    """Evolve from ``t0`` to ``t0 + tau`` under drive and noise."""
    if not tau > 0:
        raise ValueError(f"propagation interval must be positive, got {tau!r}")
    n_sub = int(ctrl.substeps_per_period)
    t_mid = midpoints(t0, tau, n_sub)
    p, q = period_propagator(evaluate(alpha, t_mid), evaluate(beta, t_mid), drive, tau / n_sub)
    a, b = renormalize(*su2_apply(p, q, state.a, state.b))
    return PureState(a, b)


def propagate_noiseless(state: PureState, tau: float, drive: DriveConfig) -> PureState:
    """The estimator's evolution: drive only, no discretization."""
    if not tau > 0:
        raise ValueError(f"propagation interval must be positive, got {tau!r}")
    p, q = drive_propagator(tau, drive)
    a, b = renormalize(*su2_apply(p, q, state.a, state.b))
    return PureState(a, b)
