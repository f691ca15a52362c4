"""
Maurey sampling from representing measures, orthogonal greedy selection and
log-log rate fits against the n^(-1/2) bound.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg

from app.dictionaries.atoms import RidgeAtom, atom_matrix
from app.dictionaries.service import DictionaryConfig, grid_atoms
from app.dictionaries.utils import sphere_directions
from app.domain.service import GridFunction, Quadrature, make_generator, norm_l2
from app.errors import ContractViolation, SolverFailure
from app.varnorm.combination import SparseCombination
from app.varnorm.service import synth
from app.varnorm.utils import WeightedProblem, refine_atom
from config import settings

logger = logging.getLogger(__name__)


# ============================================================================
# RATE SERIES
# ============================================================================

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    points_used: int
    truncated: bool


@dataclass(frozen=True)
class RateSeries:
    """Mean/std approximation errors per atom count with the fitted log-log slope"""

    n_values: Tuple[int, ...]
    mean_errors: Tuple[float, ...]
    std_errors: Tuple[float, ...]
    bounds: Tuple[float, ...] = ()
    greedy_errors: Tuple[float, ...] = ()
    fit: Optional[RateFit] = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ContractViolation("atom counts must be strictly increasing")
        if any(e < 0 for e in self.mean_errors):
            raise ContractViolation("errors must be nonnegative")

    @property
    def slope(self) -> float:
        return self.fit.slope if self.fit else float("nan")

    @property
    def intercept(self) -> float:
        return self.fit.intercept if self.fit else float("nan")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "n": list(self.n_values),
                "mean_error": list(self.mean_errors),
                "std_error": list(self.std_errors),
            }
        )
        if self.bounds:
            frame["bound"] = list(self.bounds)
        if self.greedy_errors:
            frame["greedy_error"] = list(self.greedy_errors)
        frame["slope"] = self.slope
        frame["intercept"] = self.intercept
        return frame


def rate_fit(series: Union[RateSeries, Sequence[int]], errors: Optional[Sequence[float]] = None) -> RateFit:
    """Least-squares slope of log(mean error) against log(n); zero errors cut the series.
    Takes a RateSeries, or the atom counts and errors directly."""
    if isinstance(series, RateSeries):
        n_values, errors = series.n_values, series.mean_errors
    elif errors is None:
        raise ContractViolation("rate fit needs errors alongside the atom counts")
    else:
        n_values = series
    n_values = np.asarray(n_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if n_values.shape[0] < 3:
        raise ContractViolation("rate fit needs at least 3 points")

    zero = np.flatnonzero(errors <= 0.0)
    truncated = zero.size > 0
    used = int(zero[0]) if truncated else errors.shape[0]
    if used < 2:
        raise ContractViolation("exact recovery before two positive errors; no slope to fit")
    if truncated:
        logger.warning(f"rate fit truncated to the first {used} points (exact recovery at n={int(n_values[used])})")

    slope, intercept = np.polyfit(np.log(n_values[:used]), np.log(errors[:used]), 1)
    return RateFit(slope=float(slope), intercept=float(intercept), points_used=used, truncated=truncated)


# ============================================================================
# MAUREY SAMPLING
# ============================================================================

def _sampling_law(representation: SparseCombination) -> Tuple[float, np.ndarray, np.ndarray]:
    mass = representation.mass
    if mass <= 0.0:
        raise ContractViolation("cannot sample from a zero-mass representation")
    magnitudes = np.abs(representation.coefficients)
    probabilities = magnitudes / magnitudes.sum()
    phases = np.where(magnitudes > 0, representation.coefficients / np.where(magnitudes > 0, magnitudes, 1.0), 0.0)
    return mass, probabilities, phases


def _draw(probabilities: np.ndarray, n: int, seed: int) -> np.ndarray:
    return make_generator(seed).choice(probabilities.shape[0], size=n, p=probabilities)


def maurey_sample(representation: SparseCombination, n: int, seed: int) -> SparseCombination:
    """n i.i.d. atoms drawn with probability |a_i|/M, each carrying sign(a_i) * M / n"""
    if n < 1:
        raise ContractViolation(f"atom count must be >= 1, got {n}")
    mass, probabilities, phases = _sampling_law(representation)
    picks = _draw(probabilities, n, seed)
    atoms = tuple(representation.atoms[i] for i in picks)
    return SparseCombination(atoms, phases[picks] * (mass / n))


def maurey_rate_series(
    representation: SparseCombination,
    quadrature: Quadrature,
    norm_bound: float,
    n_values: Sequence[int],
    seeds: Sequence[int],
    greedy_config: Optional[DictionaryConfig] = None,
) -> RateSeries:
    """Mean/std of ||f - f_n|| over seeds for each n, with the bound K_D * M / sqrt(n)"""
    mass, probabilities, phases = _sampling_law(representation)
    columns = atom_matrix(representation.atoms, quadrature.nodes)
    values = columns @ representation.coefficients
    weights = quadrature.weights

    means, stds, bounds = [], [], []
    for n in n_values:
        errors = []
        for seed in seeds:
            picks = _draw(probabilities, n, seed)
            approximation = columns[:, picks] @ (phases[picks] * (mass / n))
            gap = values - approximation
            errors.append(float(np.sqrt(weights @ (np.abs(gap) ** 2))))
        means.append(float(np.mean(errors)))
        stds.append(float(np.std(errors)))
        bounds.append(norm_bound * mass / math.sqrt(n))
        logger.debug(f"n={n}: mean error {means[-1]:.4e} (bound {bounds[-1]:.4e})")

    greedy_errors: Tuple[float, ...] = ()
    if greedy_config is not None:
        f = GridFunction(quadrature, values)
        result = orthogonal_greedy(f, greedy_config, max(n_values))
        # an exhausted grid stops early; later counts keep the last error
        greedy_errors = tuple(result.errors[min(n, len(result.errors)) - 1] for n in n_values)

    fit = rate_fit(n_values, means)
    logger.info(f"📉 Maurey rate: slope {fit.slope:.3f} over n={list(n_values)}")
    return RateSeries(
        n_values=tuple(int(n) for n in n_values),
        mean_errors=tuple(means),
        std_errors=tuple(stds),
        bounds=tuple(bounds),
        greedy_errors=greedy_errors,
        fit=fit,
    )


# ============================================================================
# ORTHOGONAL GREEDY
# ============================================================================

@dataclass(frozen=True)
class GreedyResult:
    combination: SparseCombination
    errors: Tuple[float, ...] = field(default_factory=tuple)


def orthogonal_greedy(f: GridFunction, config: DictionaryConfig, n: int) -> GreedyResult:
    """Select n atoms by normalized correlation and project f onto their span after each step"""
    if n < 1:
        raise ContractViolation(f"step count must be >= 1, got {n}")

    problem = WeightedProblem(f.quadrature, f.values)
    grid = grid_atoms(config)
    grid_columns = problem.columns(grid)
    grid_norms = np.linalg.norm(grid_columns, axis=0)
    usable = grid_norms > 0

    y = problem.y
    atoms, columns, chosen = [], [], []
    coefficients = np.zeros(0)
    residual = y.copy()
    errors: List[float] = []

    for step in range(n):
        correlations = np.abs(np.conj(grid_columns).T @ residual)
        scores = np.where(usable, correlations / np.where(usable, grid_norms, 1.0), -np.inf)
        scores[np.asarray(chosen, dtype=int)] = -np.inf
        if not np.isfinite(scores.max()):
            logger.warning(f"grid exhausted after {step} greedy steps")
            break
        best = int(np.argmax(scores))

        def criterion(atom, _r=residual):
            column = problem.column(atom)
            length = np.linalg.norm(column)
            return float(np.abs(np.vdot(column, _r)) / length) if length > 0 else 0.0

        atom, _ = refine_atom(grid[best], criterion, config)
        if atom in atoms:
            atom = grid[best]
        atoms.append(atom)
        columns.append(grid_columns[:, best] if atom is grid[best] else problem.column(atom))
        chosen.append(best)

        matrix = np.column_stack(columns)
        gram = np.conj(matrix).T @ matrix
        gram = gram + settings.GRAM_REGULARIZATION * np.real(np.trace(gram)) * np.eye(gram.shape[0])
        try:
            factor = linalg.cho_factor(gram)
            coefficients = linalg.cho_solve(factor, np.conj(matrix).T @ y)
        except linalg.LinAlgError as exc:
            raise SolverFailure(
                f"Gram solve failed at greedy step {step + 1}",
                result=GreedyResult(SparseCombination(tuple(atoms[:-1]), coefficients), tuple(errors)),
            ) from exc

        residual = y - matrix @ coefficients
        errors.append(float(np.linalg.norm(residual)))

    return GreedyResult(SparseCombination(tuple(atoms), coefficients), tuple(errors))


# ============================================================================
# BENCHMARK
# ============================================================================

def benchmark_combination(config: DictionaryConfig, atoms: int = 50, seed: int = 0) -> SparseCombination:
    """Fixed random P_k combination whose hyperplanes cut through the domain"""
    rng = make_generator(seed)
    dim = config.dim
    if dim == 1:
        directions = sphere_directions(1, 2)[rng.integers(0, 2, size=atoms)]
    else:
        raw = rng.normal(size=(atoms, dim))
        directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    reach = 0.9 * config.domain.radius
    offsets = rng.uniform(-reach, reach, size=atoms)
    coefficients = rng.normal(size=atoms)
    chosen = tuple(RidgeAtom(config.k, omega, b) for omega, b in zip(directions, offsets))
    return SparseCombination(chosen, coefficients)


def average_samples(samples: Sequence[SparseCombination], quadrature: Quadrature) -> GridFunction:
    """Pointwise mean of the synthesized samples"""
    total = np.zeros(quadrature.size, dtype=complex if any(np.iscomplexobj(s.coefficients) for s in samples) else float)
    for sample in samples:
        total = total + sample.evaluate(quadrature.nodes)
    return GridFunction(quadrature, total / len(samples))


def sample_error(representation: SparseCombination, sample: SparseCombination, quadrature: Quadrature) -> float:
    return norm_l2(synth(representation, quadrature) - synth(sample, quadrature))
