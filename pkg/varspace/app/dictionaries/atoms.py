"""Atom value types and their evaluation rules."""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from app.errors import ContractViolation


def relu_power(t: np.ndarray, k: int) -> np.ndarray:
    """sigma_k(t) = max(0, t)^k, with sigma_0(t) = 1 for t >= 0"""
    t = np.asarray(t, dtype=float)
    if k == 0:
        return (t >= 0).astype(float)
    return np.maximum(t, 0.0) ** k


def _as_tuple(vector) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.ravel(vector))


# ============================================================================
# ATOM TYPES
# ============================================================================

@dataclass(frozen=True)
class RidgeAtom:
    """sigma_k(omega . x + b) with |omega|_2 = 1"""

    k: int
    omega: Tuple[float, ...]
    b: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _as_tuple(self.omega))
        object.__setattr__(self, "b", float(self.b))
        if self.k < 0:
            raise ContractViolation(f"ridge power must be >= 0, got {self.k}")
        if abs(math.sqrt(sum(w * w for w in self.omega)) - 1.0) > 1e-10:
            raise ContractViolation(f"ridge direction must be a unit vector, got {self.omega}")

    family = "P_k"

    @property
    def dim(self) -> int:
        return len(self.omega)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return eval_ridge(self, points)


@dataclass(frozen=True)
class PolynomialRidgeAtom:
    """(omega . x + b)^degree; polynomial activation used by degeneracy checks"""

    degree: int
    omega: Tuple[float, ...]
    b: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _as_tuple(self.omega))
        object.__setattr__(self, "b", float(self.b))

    family = "poly"

    @property
    def dim(self) -> int:
        return len(self.omega)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(points) @ np.asarray(self.omega) + self.b
        return t ** self.degree


@dataclass(frozen=True)
class SpectralAtom:
    """(1 + |xi|)^(-s) exp(2 pi i xi . x)"""

    s: float
    xi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "xi", _as_tuple(self.xi))
        object.__setattr__(self, "s", float(self.s))
        if self.s < 0:
            raise ContractViolation(f"decay order must be >= 0, got {self.s}")

    family = "F_s"

    @property
    def dim(self) -> int:
        return len(self.xi)

    @property
    def scale(self) -> float:
        return (1.0 + float(np.linalg.norm(self.xi))) ** (-self.s)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return eval_spectral(self, points)


@dataclass(frozen=True)
class BarronAtom:
    """(|omega|_1 + |b|)^(-1) sigma_1(omega . x + b), invariant under positive scaling"""

    omega: Tuple[float, ...]
    b: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _as_tuple(self.omega))
        object.__setattr__(self, "b", float(self.b))
        if self.weight == 0.0:
            raise ContractViolation("Barron atom needs (omega, b) != (0, 0)")

    family = "B"

    @property
    def dim(self) -> int:
        return len(self.omega)

    @property
    def weight(self) -> float:
        return float(np.abs(self.omega).sum() + abs(self.b))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return eval_barron(self, points)


Atom = Union[RidgeAtom, PolynomialRidgeAtom, SpectralAtom, BarronAtom]


# ============================================================================
# EVALUATION
# ============================================================================

def eval_ridge(atom: RidgeAtom, points: np.ndarray) -> np.ndarray:
    t = np.atleast_2d(points) @ np.asarray(atom.omega) + atom.b
    return relu_power(t, atom.k)


def eval_spectral(atom: SpectralAtom, points: np.ndarray) -> np.ndarray:
    phase = np.atleast_2d(points) @ np.asarray(atom.xi)
    return atom.scale * np.exp(2j * np.pi * phase)


def eval_barron(atom: BarronAtom, points: np.ndarray) -> np.ndarray:
    t = np.atleast_2d(points) @ np.asarray(atom.omega) + atom.b
    return np.maximum(t, 0.0) / atom.weight


def atom_matrix(atoms: Sequence[Atom], points: np.ndarray) -> np.ndarray:
    """Column j holds atoms[j] evaluated at every point"""
    points = np.atleast_2d(points)
    if len(atoms) == 0:
        return np.zeros((points.shape[0], 0))

    kinds = {type(atom) for atom in atoms}
    if kinds == {RidgeAtom} and len({atom.k for atom in atoms}) == 1:
        omegas = np.array([atom.omega for atom in atoms])
        offsets = np.array([atom.b for atom in atoms])
        return relu_power(points @ omegas.T + offsets, atoms[0].k)
    if kinds == {SpectralAtom}:
        xis = np.array([atom.xi for atom in atoms])
        scales = np.array([atom.scale for atom in atoms])
        return scales * np.exp(2j * np.pi * (points @ xis.T))
    if kinds == {BarronAtom}:
        omegas = np.array([atom.omega for atom in atoms])
        offsets = np.array([atom.b for atom in atoms])
        weights = np.array([atom.weight for atom in atoms])
        return np.maximum(points @ omegas.T + offsets, 0.0) / weights

    return np.column_stack([atom.evaluate(points) for atom in atoms])
