"""
Dictionary configuration, parameter grids and the constructive embeddings between
the Barron family B and the ridge family P_1.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit

from app.dictionaries.atoms import (
    Atom,
    BarronAtom,
    RidgeAtom,
    SpectralAtom,
    atom_matrix,
    relu_power,
)
from app.dictionaries.utils import direction_spacing, frequency_lattice, sphere_directions
from app.domain.service import BoxDomain, Quadrature, make_generator
from app.errors import ConfigurationError, ContractViolation
from app.varnorm.combination import SparseCombination, combine
from config import settings

logger = logging.getLogger(__name__)


# ============================================================================
# OFFSET VALIDATION
# ============================================================================

@dataclass(frozen=True)
class OffsetCheck:
    """Margins of c1 below inf x.omega and of c2 above sup x.omega"""

    c1: float
    c2: float
    inf_projection: float
    sup_projection: float

    @property
    def lower_margin(self) -> float:
        return self.inf_projection - self.c1

    @property
    def upper_margin(self) -> float:
        return self.c2 - self.sup_projection

    @property
    def passed(self) -> bool:
        return self.lower_margin > 0 and self.upper_margin > 0

    def raise_for_status(self) -> "OffsetCheck":
        if self.lower_margin <= 0:
            raise ConfigurationError(
                f"c1={self.c1} must be strictly below inf x.omega = {self.inf_projection:.6g}",
                loc="dictionary.c1",
            )
        if self.upper_margin <= 0:
            raise ConfigurationError(
                f"c2={self.c2} must be strictly above sup x.omega = {self.sup_projection:.6g}",
                loc="dictionary.c2",
            )
        return self


def validate_offsets(domain: BoxDomain, c1: float, c2: float) -> OffsetCheck:
    """Compare c1, c2 against -max|x|_2 and +max|x|_2 over the box"""
    radius = domain.radius
    return OffsetCheck(c1=float(c1), c2=float(c2), inf_projection=-radius, sup_projection=radius)


# ============================================================================
# CONFIGURATION
# ============================================================================

class DictionaryConfig(BaseModel):
    """Family, domain and parameter-grid resolution of a dictionary"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["P_k", "F_s", "B"] = "P_k"
    domain: BoxDomain
    k: int = Field(1, ge=0)
    c1: Optional[float] = None
    c2: Optional[float] = None
    s: float = Field(0.0, ge=0)
    directions: int = Field(16, ge=1)
    offsets: int = Field(21, ge=1)
    xi_step: float = Field(0.5, gt=0)
    xi_radius: float = Field(2.0, ge=0)

    @model_validator(mode="after")
    def _check_offsets(self):
        if self.family == "P_k":
            if self.c1 is None or self.c2 is None:
                raise ValueError("ridge family needs c1 and c2")
            check = validate_offsets(self.domain, self.c1, self.c2)
            if not check.passed:
                raise ValueError(
                    f"offsets must satisfy c1 < {check.inf_projection:.6g} and c2 > {check.sup_projection:.6g}"
                )
        return self

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def offset_values(self) -> np.ndarray:
        return np.linspace(self.c1, self.c2, self.offsets)

    @property
    def offset_spacing(self) -> float:
        if self.offsets <= 1:
            return float(self.c2 - self.c1)
        return float((self.c2 - self.c1) / (self.offsets - 1))

    @property
    def direction_spacing(self) -> float:
        if self.family == "B":
            return direction_spacing(self.dim + 1, self.directions * self.offsets)
        return direction_spacing(self.dim, self.directions)


# ============================================================================
# PARAMETER GRIDS
# ============================================================================

def grid_atoms(config: DictionaryConfig) -> List[Atom]:
    """Deterministic enumeration of the dictionary's parameter grid"""
    if config.family == "P_k":
        atoms = [
            RidgeAtom(config.k, omega, b)
            for omega in sphere_directions(config.dim, config.directions)
            for b in config.offset_values
        ]
    elif config.family == "F_s":
        atoms = [
            SpectralAtom(config.s, xi)
            for xi in frequency_lattice(config.dim, config.xi_step, config.xi_radius)
        ]
    else:
        points = sphere_directions(config.dim + 1, config.directions * config.offsets)
        atoms = [BarronAtom(point[:-1], point[-1]) for point in points]

    if not atoms:
        raise ConfigurationError(f"empty parameter grid for family {config.family}", loc="dictionary")
    return atoms


def atom_norms(atoms: Sequence[Atom], quadrature: Quadrature) -> np.ndarray:
    values = atom_matrix(atoms, quadrature.nodes)
    return np.sqrt(quadrature.weights @ (np.abs(values) ** 2))


def atom_norm_bound(config: DictionaryConfig, quadrature: Quadrature) -> float:
    """K_D: largest grid-atom L2 norm times the safety factor"""
    norms = atom_norms(grid_atoms(config), quadrature)
    return float(norms.max() * settings.NORM_SAFETY_FACTOR)


# ============================================================================
# BARRON <-> RIDGE CONSTRUCTIONS
# ============================================================================

def _constant_pair(direction: np.ndarray, c2: float, value: float) -> SparseCombination:
    """value * [sigma_1(u.x + c2) - sigma_1(u.x + c2 - 1)], equal to `value` on the box"""
    return SparseCombination(
        (RidgeAtom(1, direction, c2), RidgeAtom(1, direction, c2 - 1.0)),
        np.array([value, -value]),
    )


def decompose_barron_atom(atom: BarronAtom, c1: float, c2: float, domain: BoxDomain) -> SparseCombination:
    """Exact P_1 combination of l1 mass <= 4 reproducing a Barron atom on the box"""
    check = validate_offsets(domain, c1, c2).raise_for_status()
    if c2 <= check.sup_projection + 1.0:
        raise ConfigurationError(
            f"c2={c2} must exceed sup x.omega + 1 = {check.sup_projection + 1.0:.6g} for the constant pair",
            loc="dictionary.c2",
        )

    omega = np.asarray(atom.omega)
    r = float(np.linalg.norm(omega))
    if r == 0.0:
        if atom.b <= 0:
            return SparseCombination.empty()
        return _constant_pair(np.eye(atom.dim)[0], c2, 1.0)

    direction = omega / r
    beta = atom.b / r
    scale = r / atom.weight

    if beta < c1:
        return SparseCombination.empty()
    if beta <= c2:
        return SparseCombination.single(RidgeAtom(1, direction, beta), scale)

    # the hyperplane misses the box: the atom is affine there
    linear = SparseCombination(
        (RidgeAtom(1, direction, 0.0), RidgeAtom(1, -direction, 0.0)),
        np.array([scale, -scale]),
    )
    return linear.concat(_constant_pair(direction, c2, scale * beta))


def embed_ridge_in_barron(atom: RidgeAtom) -> Tuple[BarronAtom, float]:
    """P_1 atom as coefficient * Barron atom, coefficient = |omega|_1 + |b|"""
    if atom.k != 1:
        raise ContractViolation(f"only sigma_1 ridge atoms embed into B, got k={atom.k}")
    barron = BarronAtom(atom.omega, atom.b)
    return barron, barron.weight


def barron_to_ridge(combination: SparseCombination, c1: float, c2: float, domain: BoxDomain) -> SparseCombination:
    parts = [
        decompose_barron_atom(atom, c1, c2, domain).scaled(coefficient)
        for atom, coefficient in zip(combination.atoms, combination.coefficients)
    ]
    return combine(parts)


def ridge_to_barron(combination: SparseCombination) -> SparseCombination:
    atoms, coefficients = [], []
    for atom, coefficient in zip(combination.atoms, combination.coefficients):
        barron, weight = embed_ridge_in_barron(atom)
        atoms.append(barron)
        coefficients.append(coefficient * weight)
    return SparseCombination(tuple(atoms), np.array(coefficients))


# ============================================================================
# DEGENERACY AND CLOSEDNESS DEMOS
# ============================================================================

def gram_matrix(atoms: Sequence[Atom], quadrature: Quadrature) -> np.ndarray:
    values = atom_matrix(atoms, quadrature.nodes)
    weighted = values * quadrature.weights[:, None]
    return np.conj(values).T @ weighted


def gram_rank(atoms: Sequence[Atom], quadrature: Quadrature, tolerance: float = 1e-8) -> int:
    """Number of Gram singular values above tolerance * largest"""
    if len(atoms) == 0:
        raise ContractViolation("gram_rank needs at least one atom")
    singular = np.linalg.svd(gram_matrix(atoms, quadrature), compute_uv=False)
    if singular[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular > tolerance * singular[0]))


def sigmoid_heaviside_limit(r_values: Sequence[float], quadrature: Quadrature) -> List[float]:
    """||sigma_0(x_1) - logistic(r x_1)||_L2 for each r"""
    x1 = quadrature.nodes[:, 0]
    heaviside = relu_power(x1, 0)
    distances = []
    for r in r_values:
        if np.isinf(r):
            distances.append(0.0)
            continue
        gap = heaviside - expit(r * x1)
        distances.append(float(np.sqrt(quadrature.weights @ (gap * gap))))
    return distances


# ============================================================================
# DECOMPOSITION EXPERIMENT
# ============================================================================

def default_offsets(domain: BoxDomain) -> Tuple[float, float]:
    """c1 just below the box, c2 far enough above it for the constant pair"""
    radius = domain.radius
    return -(radius + 1.0), radius + 2.0


def random_barron_atoms(dim: int, count: int, seed: int) -> List[BarronAtom]:
    """(omega, b) Gaussian directions with log-normal scales"""
    rng = make_generator(seed)
    raw = rng.normal(size=(count, dim + 1)) * np.exp(rng.normal(size=(count, 1)))
    return [BarronAtom(row[:-1], row[-1]) for row in raw]


def random_ridge_atoms(dim: int, count: int, c1: float, c2: float, seed: int) -> List[RidgeAtom]:
    rng = make_generator(seed)
    raw = rng.normal(size=(count, dim))
    directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    offsets = rng.uniform(c1, c2, size=count)
    return [RidgeAtom(1, omega, b) for omega, b in zip(directions, offsets)]


def barron_decomposition_experiment(
    dims: Sequence[int] = (1, 2, 4, 8),
    count: int = 1000,
    seed: int = 0,
    points: int = 2000,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Per-atom decomposition rows (B -> P_1) and per-dimension summaries with the P_1 -> B embedding"""
    rows, summary = [], []
    for dim in dims:
        domain = BoxDomain.cube(dim)
        c1, c2 = default_offsets(domain)
        sample_points = make_generator(seed + 1).uniform(-1.0, 1.0, size=(points, dim))

        masses, decomposition_errors = [], []
        for index, atom in enumerate(random_barron_atoms(dim, count, seed)):
            decomposition = decompose_barron_atom(atom, c1, c2, domain)
            error = float(np.max(np.abs(decomposition.evaluate(sample_points) - atom.evaluate(sample_points))))
            masses.append(decomposition.mass)
            decomposition_errors.append(error)
            rows.append(
                {"dim": dim, "index": index, "atoms": decomposition.size, "l1_mass": decomposition.mass, "max_error": error}
            )

        bound = math.sqrt(dim) + max(abs(c1), abs(c2))
        coefficients, embedding_errors = [], []
        for atom in random_ridge_atoms(dim, count, c1, c2, seed + 2):
            barron, coefficient = embed_ridge_in_barron(atom)
            coefficients.append(coefficient)
            gap = coefficient * barron.evaluate(sample_points) - atom.evaluate(sample_points)
            embedding_errors.append(float(np.max(np.abs(gap))))

        passed = (
            max(masses) <= 4.0 + 1e-12
            and max(decomposition_errors) <= 1e-10
            and max(coefficients) <= bound
            and max(embedding_errors) <= 1e-10
        )
        summary.append(
            {
                "dim": dim,
                "c1": c1,
                "c2": c2,
                "max_l1_mass": max(masses),
                "max_decomposition_error": max(decomposition_errors),
                "max_embedding_coefficient": max(coefficients),
                "embedding_bound": bound,
                "max_embedding_error": max(embedding_errors),
                "passed": passed,
            }
        )
        logger.info(f"{'✅' if passed else '❌'} Barron decomposition d={dim}: max mass {max(masses):.4f}")
    return pd.DataFrame(rows), pd.DataFrame(summary)
