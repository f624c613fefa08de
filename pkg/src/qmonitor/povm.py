"""Unsharp two-outcome measurement along a Bloch direction.

The measurement is parametrised by its sharpness ``delta_p = 1 - 2 p0`` and
the period between consecutive measurements. Kraus operators are the
mixtures

    M0 = sqrt(p0) P+ + sqrt(1 - p0) P-
    M1 = sqrt(1 - p0) P+ + sqrt(p0) P-

of the projectors ``P+- = (1 +- r.sigma) / 2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .qubit import IDENTITY, PureState, pauli_along

log = logging.getLogger(__name__)

DIRECTION_TOL = 1e-9


class ImpossibleOutcomeError(ArithmeticError):
    """The requested outcome has zero probability for the given state."""


@dataclass(frozen=True)
class MeasurementConfig:
    """Measurement direction, sharpness and period (units of 1/Omega_R).

    ``direction`` is kept exactly as supplied; :attr:`axis` is the unit
    vector actually used.
    """

    direction: tuple = (0.0, 0.0, 1.0)
    delta_p: float = 0.2
    period: float = 2 * np.pi / 10

    def __post_init__(self):
        direction = tuple(float(c) for c in np.asarray(self.direction, dtype=float).reshape(3))
        object.__setattr__(self, "direction", direction)
        if not 0.0 <= self.delta_p <= 1.0:
            raise ValueError(f"delta_p must lie in [0, 1], got {self.delta_p!r}")
        if not self.period > 0:
            raise ValueError(f"measurement period must be positive, got {self.period!r}")
        if np.linalg.norm(direction) == 0:
            raise ValueError("measurement direction must be nonzero")

    @property
    def p0(self) -> float:
        return (1.0 - self.delta_p) / 2.0

    @property
    def direction_norm(self) -> float:
        return float(np.linalg.norm(self.direction))

    @property
    def renormalized(self) -> bool:
        return abs(self.direction_norm - 1.0) > DIRECTION_TOL

    @property
    def axis(self) -> np.ndarray:
        return np.asarray(self.direction) / self.direction_norm

    @property
    def strength(self) -> float:
        return measurement_strength(self)


@dataclass(frozen=True)
class KrausPair:
    m0: np.ndarray = field(repr=False)
    m1: np.ndarray = field(repr=False)

    def __getitem__(self, n: int) -> np.ndarray:
        if n == 0:
            return self.m0
        if n == 1:
            return self.m1
        raise IndexError(f"outcome must be 0 or 1, got {n!r}")

    def completeness_error(self) -> float:
        total = self.m0.conj().T @ self.m0 + self.m1.conj().T @ self.m1
        return float(np.max(np.abs(total - IDENTITY)))


def projectors(axis) -> tuple[np.ndarray, np.ndarray]:
    r_sigma = pauli_along(axis)
    return (IDENTITY + r_sigma) / 2, (IDENTITY - r_sigma) / 2


def build_kraus(config: MeasurementConfig) -> KrausPair:
    if config.renormalized:
        log.warning(
            "measurement direction %s has norm %.6g; using the normalized axis",
            config.direction,
            config.direction_norm,
        )
    p_plus, p_minus = projectors(config.axis)
    p0 = config.p0
    s0, s1 = np.sqrt(p0), np.sqrt(1.0 - p0)
    return KrausPair(m0=s0 * p_plus + s1 * p_minus, m1=s1 * p_plus + s0 * p_minus)


def _check_outcome(n) -> int:
    if n not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {n!r}")
    return int(n)


def outcome_probability(state: PureState, kraus: KrausPair, n: int) -> float:
    """Born probability ``<psi|Mn^dag Mn|psi>``."""
    n = _check_outcome(n)
    state.check_normalized()
    amp = kraus[n] @ state.vector
    return float(np.vdot(amp, amp).real)


def apply_measurement(state: PureState, kraus: KrausPair, n: int) -> PureState:
    """Post-measurement state for outcome ``n``, renormalized."""
    n = _check_outcome(n)
    amp = kraus[n] @ state.vector
    p = float(np.vdot(amp, amp).real)
    if p <= 0.0:
        raise ImpossibleOutcomeError(f"outcome {n} has zero probability for this state")
    return PureState.from_vector(amp / np.sqrt(p), normalize=True)


def sample_outcome(state: PureState, kraus: KrausPair, rng: np.random.Generator) -> int:
    """Draw one uniform variate and compare it against ``p(0)``."""
    return 0 if rng.random() < outcome_probability(state, kraus, 0) else 1


def measurement_strength(config: MeasurementConfig) -> float:
    """Collapse rate ``gamma_m = delta_p**2 / (2 tau)`` in units of Omega_R."""
    return config.delta_p**2 / (2.0 * config.period)


def measurement_time(config: MeasurementConfig) -> float:
    """``tau_m = 2 tau / delta_p**2``; infinite for an uninformative measurement."""
    if config.delta_p == 0:
        return float("inf")
    return 2.0 * config.period / config.delta_p**2
