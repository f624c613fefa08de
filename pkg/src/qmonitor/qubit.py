"""Two-level system algebra: pure states, Pauli operators, rotations, fidelity.

Operators are plain ``(2, 2)`` complex numpy arrays. States are immutable
:class:`PureState` values; batched kernels elsewhere work on raw amplitude
arrays and only convert at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-6
UNIT_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class NormalizationError(ValueError):
    """Raised when a state or direction is not of unit length."""


@dataclass(frozen=True)
class PureState:
    """Normalized qubit state ``a|up> + b|down>``.

    Global phase is not canonicalised; compare states with :func:`fidelity`
    or through their Bloch vectors.
    """

    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))

    @classmethod
    def from_vector(cls, vec, normalize: bool = True) -> "PureState":
        vec = np.asarray(vec, dtype=complex).reshape(2)
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise NormalizationError("cannot normalize the zero vector")
            vec = vec / norm
        return cls(vec[0], vec[1])

    @classmethod
    def up(cls) -> "PureState":
        return cls(1.0, 0.0)

    @classmethod
    def down(cls) -> "PureState":
        return cls(0.0, 1.0)

    @classmethod
    def from_bloch(cls, r) -> "PureState":
        """State whose Bloch vector points along the unit vector ``r``."""
        x, y, z = _unit(r, "Bloch vector")
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        phi = np.arctan2(y, x)
        return cls(np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))

    @classmethod
    def haar_random(cls, rng: np.random.Generator) -> "PureState":
        """Uniform sample on the Bloch sphere from four standard normals."""
        re = rng.standard_normal(2)
        im = rng.standard_normal(2)
        return cls.from_vector(re + 1j * im)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.sqrt(abs(self.a) ** 2 + abs(self.b) ** 2))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm - 1.0) > tol:
            raise NormalizationError(f"state norm {self.norm!r} deviates from 1 by more than {tol}")

    def evolve(self, op: np.ndarray) -> "PureState":
        """Apply ``op`` and renormalize to absorb rounding drift."""
        return PureState.from_vector(np.asarray(op) @ self.vector)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def length(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


def _unit(r, what: str) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(3)
    if abs(np.linalg.norm(r) - 1.0) > UNIT_TOL:
        raise NormalizationError(f"{what} {tuple(r)} is not a unit vector (|r| = {np.linalg.norm(r)!r})")
    return r


def bloch_components(a, b):
    """Bloch vector components for amplitude arrays (any matching shape)."""
    cross = np.conj(a) * b
    x = 2.0 * cross.real
    y = 2.0 * cross.imag
    z = np.abs(a) ** 2 - np.abs(b) ** 2
    return x, y, z


def bloch_of(state: PureState) -> BlochVector:
    """Expectation values of the three Pauli operators."""
    state.check_normalized()
    x, y, z = bloch_components(state.a, state.b)
    return BlochVector(float(x), float(y), float(z))


def pauli_along(r) -> np.ndarray:
    """The operator ``r . sigma`` for a unit direction ``r``."""
    x, y, z = _unit(r, "direction")
    return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z


def rotation(axis, angle: float) -> np.ndarray:
    """``exp(-i angle/2 axis.sigma)`` in closed form."""
    n_sigma = pauli_along(axis)
    return np.cos(angle / 2) * IDENTITY - 1j * np.sin(angle / 2) * n_sigma


def fidelity(a: PureState, b: PureState) -> float:
    """Squared overlap ``|<a|b>|^2``."""
    a.check_normalized()
    b.check_normalized()
    overlap = np.conj(a.a) * b.a + np.conj(a.b) * b.b
    return float(min(1.0, abs(overlap) ** 2))


def overlap_squared(a1, b1, a2, b2):
    """Vectorised ``|<psi1|psi2>|^2`` over amplitude arrays."""
    ov = np.conj(a1) * a2 + np.conj(b1) * b2
    return np.minimum(1.0, ov.real**2 + ov.imag**2)


def is_unitary(op: np.ndarray, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op.conj().T @ op - IDENTITY)) < tol)


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op - op.conj().T)) < tol)
