"""Numerical kernels of the variation-norm solver: soft-thresholding coordinate
descent on the active set and gradient-free refinement of atom parameters."""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from app.dictionaries.atoms import Atom, BarronAtom, RidgeAtom, SpectralAtom, atom_matrix
from app.dictionaries.service import DictionaryConfig
from config import settings

logger = logging.getLogger(__name__)


# ============================================================================
# WEIGHTED LEAST-SQUARES VIEW
# ============================================================================

class WeightedProblem:
    """f and atoms as sqrt(w)-weighted vectors, optionally with a subspace projected out"""

    def __init__(self, quadrature, values: np.ndarray, basis: Optional[np.ndarray] = None):
        self.quadrature = quadrature
        self.sqrt_w = np.sqrt(quadrature.weights)
        self.basis = basis
        self.y = self.project(self.sqrt_w * np.asarray(values))

    def project(self, vectors: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return vectors
        return vectors - self.basis @ (np.conj(self.basis).T @ vectors)

    def columns(self, atoms) -> np.ndarray:
        values = atom_matrix(atoms, self.quadrature.nodes)
        return self.project(self.sqrt_w[:, None] * values)

    def column(self, atom: Atom) -> np.ndarray:
        return self.columns([atom])[:, 0]


def soft_threshold(z, t: float):
    """Complex-safe shrinkage of |z| by t"""
    magnitude = np.abs(z)
    if magnitude <= t:
        return 0.0 * z
    return z * (1.0 - t / magnitude)


def lasso_coordinate_descent(
    gram: np.ndarray,
    rhs: np.ndarray,
    coefficients: np.ndarray,
    lam: float,
    max_sweeps: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> np.ndarray:
    """Minimize c^H G c - 2 Re(c^H z) + lam * |c|_1 by cyclic coordinate descent"""
    max_sweeps = max_sweeps or settings.CD_MAX_SWEEPS
    tolerance = tolerance or settings.CD_TOLERANCE
    c = np.array(coefficients, copy=True)
    diagonal = np.real(np.diag(gram))
    half_lam = 0.5 * lam

    for _ in range(max_sweeps):
        largest_step = 0.0
        for j in range(c.shape[0]):
            if diagonal[j] <= 0.0:
                continue
            rho = rhs[j] - gram[j] @ c + diagonal[j] * c[j]
            updated = soft_threshold(rho, half_lam) / diagonal[j]
            step = abs(updated - c[j])
            if step > 0.0:
                c[j] = updated
                largest_step = max(largest_step, step)
        if largest_step <= tolerance * max(float(np.abs(c).max(initial=0.0)), 1e-300):
            break
    return c


# ============================================================================
# ATOM REFINEMENT
# ============================================================================

def _parameter_space(atom: Atom, config: DictionaryConfig):
    """(params, steps, unpack) for the coordinate search around `atom`"""
    if isinstance(atom, RidgeAtom):
        params = np.r_[np.asarray(atom.omega), atom.b]
        omega_step = 0.0 if atom.dim == 1 else config.direction_spacing
        steps = np.r_[np.full(atom.dim, omega_step), config.offset_spacing]

        def unpack(trial):
            omega = trial[:-1]
            length = np.linalg.norm(omega)
            if length == 0.0:
                return None
            return RidgeAtom(atom.k, omega / length, float(np.clip(trial[-1], config.c1, config.c2)))

        return params, steps, unpack

    if isinstance(atom, SpectralAtom):
        return np.asarray(atom.xi, dtype=float), np.full(atom.dim, config.xi_step), lambda trial: SpectralAtom(atom.s, trial)

    if isinstance(atom, BarronAtom):
        params = np.r_[np.asarray(atom.omega), atom.b]
        params = params / np.linalg.norm(params)
        steps = np.full(params.shape[0], config.direction_spacing)

        def unpack(trial):
            length = np.linalg.norm(trial)
            if length == 0.0:
                return None
            return BarronAtom(trial[:-1] / length, trial[-1] / length)

        return params, steps, unpack

    raise TypeError(f"cannot refine atoms of type {type(atom).__name__}")


def _parameters_of(atom: Atom) -> np.ndarray:
    if isinstance(atom, SpectralAtom):
        return np.asarray(atom.xi, dtype=float)
    params = np.r_[np.asarray(atom.omega), atom.b]
    if isinstance(atom, BarronAtom):
        params = params / np.linalg.norm(params)
    return params


def refine_atom(
    atom: Atom,
    score: Callable[[Atom], float],
    config: DictionaryConfig,
    steps: Optional[int] = None,
) -> Tuple[Atom, float]:
    """Coordinate search maximizing `score`; step sizes start at the grid spacing and halve each sweep"""
    steps = settings.REFINE_STEPS if steps is None else steps
    params, step_sizes, unpack = _parameter_space(atom, config)
    best_atom, best = atom, score(atom)

    for _ in range(steps):
        for i in range(params.shape[0]):
            if step_sizes[i] == 0.0:
                continue
            for sign in (1.0, -1.0):
                trial = params.copy()
                trial[i] += sign * step_sizes[i]
                candidate = unpack(trial)
                if candidate is None:
                    continue
                value = score(candidate)
                if value > best * (1.0 + 1e-12):
                    best_atom, best = candidate, value
                    params = _parameters_of(candidate)
                    break
        step_sizes = step_sizes * 0.5

    return best_atom, best
