"""Finite atom combinations, which double as discrete representing measures."""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from app.dictionaries.atoms import Atom, atom_matrix
from app.errors import ContractViolation


@dataclass(frozen=True, eq=False)
class SparseCombination:
    """sum_i a_i atom_i; the l1 mass sum |a_i| is the total variation of the measure"""

    atoms: Tuple[Atom, ...]
    coefficients: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        coefficients = np.array(self.coefficients, copy=True)
        if coefficients.ndim != 1 or coefficients.shape[0] != len(atoms):
            raise ContractViolation(
                f"{len(atoms)} atoms but coefficient shape {coefficients.shape}"
            )
        if not np.iscomplexobj(coefficients):
            coefficients = coefficients.astype(float)
        coefficients.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def empty(cls) -> "SparseCombination":
        return cls((), np.zeros(0))

    @classmethod
    def single(cls, atom: Atom, coefficient=1.0) -> "SparseCombination":
        return cls((atom,), np.array([coefficient]))

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def mass(self) -> float:
        return float(np.abs(self.coefficients).sum())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.size == 0:
            return np.zeros(points.shape[0])
        return atom_matrix(self.atoms, points) @ self.coefficients

    def scaled(self, factor) -> "SparseCombination":
        return SparseCombination(self.atoms, self.coefficients * factor)

    def concat(self, other: "SparseCombination") -> "SparseCombination":
        if other.size == 0:
            return self
        if self.size == 0:
            return other
        return SparseCombination(
            self.atoms + other.atoms, np.concatenate([self.coefficients, other.coefficients])
        )

    def pruned(self, tolerance: float = 0.0) -> "SparseCombination":
        """Drop atoms whose |coefficient| <= tolerance"""
        keep = np.abs(self.coefficients) > tolerance
        return SparseCombination(
            tuple(atom for atom, k in zip(self.atoms, keep) if k), self.coefficients[keep]
        )

    def merged(self) -> "SparseCombination":
        """Sum coefficients of identical atoms, first-occurrence order"""
        totals: Dict[Atom, complex] = {}
        for atom, coefficient in zip(self.atoms, self.coefficients):
            totals[atom] = totals.get(atom, 0) + coefficient
        coefficients = np.array(list(totals.values()), dtype=self.coefficients.dtype)
        return SparseCombination(tuple(totals.keys()), coefficients)


def combine(parts: Sequence[SparseCombination]) -> SparseCombination:
    result = SparseCombination.empty()
    for part in parts:
        result = result.concat(part)
    return result
