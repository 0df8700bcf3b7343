"""Exact statevector QAOA for diagonal Hamiltonians.

The state after ``r`` levels is ``prod_i exp(-i*tm_i*sum X) exp(-i*to_i*H) |+>``
with the objective layer of each level applied before its mixer.  Qubit 0 is
the least significant bit of the basis index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .encodings import EncodedProblem, Encoding

MAX_QUBITS = 26


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n,):
            raise ValueError("amplitude count must be 2**n")

    @classmethod
    def uniform(cls, n: int) -> StateVector:
        return cls(np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=np.complex128), n)

    @classmethod
    def basis(cls, n: int, index: int) -> StateVector:
        amp = np.zeros(1 << n, dtype=np.complex128)
        amp[index] = 1.0
        return cls(amp, n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class DiagonalHamiltonian:
    energies: np.ndarray
    feasible_mask: np.ndarray
    n: int

    def __post_init__(self):
        if self.energies.shape != (1 << self.n,) or self.feasible_mask.shape != (1 << self.n,):
            raise ValueError("tables must have length 2**n")

    @property
    def feasible_count(self) -> int:
        return int(self.feasible_mask.sum())


def default_period(kind) -> float:
    """Objective-angle period: pi for the one-hot encoding, 2*pi otherwise."""
    return math.pi if Encoding.parse(kind) is Encoding.QUBO else 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class QaoaParams:
    theta_mix: np.ndarray
    theta_obj: np.ndarray
    period: float = 2.0 * math.pi

    def __post_init__(self):
        tm = np.asarray(self.theta_mix, dtype=np.float64).reshape(-1)
        to = np.asarray(self.theta_obj, dtype=np.float64).reshape(-1)
        if tm.shape != to.shape:
            raise ValueError("theta_mix and theta_obj must have equal length")
        object.__setattr__(self, "theta_mix", np.mod(tm, math.pi))
        object.__setattr__(self, "theta_obj", np.mod(to, self.period))

    @property
    def r(self) -> int:
        return self.theta_mix.shape[0]

    def vector(self) -> np.ndarray:
        return np.concatenate([self.theta_mix, self.theta_obj])

    @classmethod
    def from_vector(cls, x, period: float) -> QaoaParams:
        x = np.asarray(x, dtype=np.float64)
        r = x.shape[0] // 2
        return cls(x[:r], x[r:], period)

    @classmethod
    def zeros(cls, r: int, period: float = 2.0 * math.pi) -> QaoaParams:
        return cls(np.zeros(r), np.zeros(r), period)

    @classmethod
    def random(cls, r: int, rng, period: float = 2.0 * math.pi) -> QaoaParams:
        return cls(rng.uniform(0.0, math.pi, r), rng.uniform(0.0, period, r), period)


def build_diagonal(problem: EncodedProblem) -> DiagonalHamiltonian:
    n = problem.num_qubits
    if n > MAX_QUBITS:
        raise ResourceError(f"{n} qubits exceed the statevector cap of {MAX_QUBITS}")
    return DiagonalHamiltonian(problem.energy_table(), problem.feasible_table(), n)


def apply_objective(s: StateVector, h: DiagonalHamiltonian, theta: float) -> StateVector:
    if s.n != h.n:
        raise ValueError("dimension mismatch")
    amp = s.amplitudes.copy()
    _kernels.phase_inplace(amp, h.energies, theta)
    return StateVector(amp, s.n)


def apply_mixer(s: StateVector, theta: float) -> StateVector:
    amp = s.amplitudes.copy()
    _kernels.mixer_inplace(amp, s.n, theta)
    return StateVector(amp, s.n)


def qaoa_state(h: DiagonalHamiltonian, p: QaoaParams) -> StateVector:
    return StateVector(_kernels.final_state(h.energies, h.n, p.theta_mix, p.theta_obj), h.n)


def expectation(s: StateVector, h: DiagonalHamiltonian) -> float:
    return float(np.dot(h.energies, s.probabilities()))


def feasible_probability(s: StateVector, h: DiagonalHamiltonian) -> float:
    return float(s.probabilities()[h.feasible_mask].sum())


def energy(h: DiagonalHamiltonian, p: QaoaParams) -> float:
    return expectation(qaoa_state(h, p), h)


def energy_and_gradient(h: DiagonalHamiltonian, p: QaoaParams) -> tuple[float, np.ndarray]:
    """Expectation and its adjoint gradient, ordered ``[d theta_mix..., d theta_obj...]``."""
    if p.r == 0:
        return float(h.energies.mean()), np.zeros(0)
    return _kernels.energy_and_gradient(h.energies, h.n, p.theta_mix, p.theta_obj)


def gradient(h: DiagonalHamiltonian, p: QaoaParams) -> np.ndarray:
    return energy_and_gradient(h, p)[1]
