"""
Variation-norm estimation
=========================
Upper bounds on the gauge of the closed symmetric convex hull of a dictionary by
conditional-gradient atom selection with a fully corrective l1 re-fit, dual lower
bounds, quotient norms modulo polynomials, and discrete-measure synthesis.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from app.dictionaries.atoms import Atom, RidgeAtom
from app.dictionaries.service import DictionaryConfig, atom_norm_bound, grid_atoms
from app.domain.service import GridFunction, Quadrature, norm_l2
from app.errors import ConfigurationError, ContractViolation, SolverFailure
from app.varnorm.combination import SparseCombination
from app.varnorm.utils import (
    WeightedProblem,
    lasso_coordinate_descent,
    refine_atom,
)
from config import settings

logger = logging.getLogger(__name__)


# ============================================================================
# REPORTS
# ============================================================================

class IterationRecord(BaseModel):
    iteration: int
    residual: float
    mass: float
    atoms: int
    lam: float


class EstimateReport(BaseModel):
    """Upper/lower bracket of a variation norm plus solver diagnostics"""

    family: str
    upper: float
    residual: float
    eps: float
    lower: float = 0.0
    lower_slack: float = 0.0
    iterations: int
    atom_count: int
    wall_time: float
    success: bool
    valid_gauge_estimate: bool
    message: str = ""
    history: List[IterationRecord] = []

    def raise_for_status(self) -> "EstimateReport":
        if not self.success:
            raise SolverFailure(self.message, result=self)
        return self


@dataclass(frozen=True)
class LowerBoundReport:
    """|<f,g>| / S with S = sup over the dictionary of |<h,g>|"""

    value: float
    sup_grid: float
    sup_refined: float
    slack: float

    @property
    def refinement_delta(self) -> float:
        return self.sup_refined - self.sup_grid


# ============================================================================
# SYNTHESIS
# ============================================================================

def synth(combination: SparseCombination, quadrature: Quadrature) -> GridFunction:
    """sum_i a_i atom_i on the quadrature nodes"""
    return GridFunction(quadrature, combination.evaluate(quadrature.nodes))


# ============================================================================
# CONDITIONAL-GRADIENT SOLVER
# ============================================================================

@dataclass
class _ActiveSet:
    atoms: List[Atom] = field(default_factory=list)
    columns: List[np.ndarray] = field(default_factory=list)
    # -1 marks refined atoms that are not grid points
    grid_index: List[int] = field(default_factory=list)
    coefficients: np.ndarray = None

    def matrix(self, rows: int) -> np.ndarray:
        if not self.columns:
            return np.zeros((rows, 0))
        return np.column_stack(self.columns)

    def append(self, atom: Atom, column: np.ndarray, index: int) -> None:
        self.atoms.append(atom)
        self.columns.append(column)
        self.grid_index.append(index)
        self.coefficients = np.append(self.coefficients, np.zeros(1, dtype=self.coefficients.dtype))

    def drop_zeros(self) -> None:
        keep = np.flatnonzero(self.coefficients != 0)
        self.atoms = [self.atoms[i] for i in keep]
        self.columns = [self.columns[i] for i in keep]
        self.grid_index = [self.grid_index[i] for i in keep]
        self.coefficients = self.coefficients[keep]

    def copy(self) -> "_ActiveSet":
        return _ActiveSet(list(self.atoms), list(self.columns), list(self.grid_index), self.coefficients.copy())


@dataclass
class _Snapshot:
    active: _ActiveSet
    lam: float
    residual: float


class _GridLasso:
    """
    Lasso ||A c - y||^2 + lam |c|_1 over the whole parameter grid, solved on a working set.
    A solve at a fixed lam only returns once no grid atom violates the optimality
    condition 2|<a, r>| <= lam, so every accepted solution is grid-optimal.
    """

    def __init__(self, problem: WeightedProblem, config: DictionaryConfig, budget: int):
        self.problem = problem
        self.config = config
        self.budget = budget
        self.grid = grid_atoms(config)
        self.grid_columns = problem.columns(self.grid)
        self.grid_norms = np.linalg.norm(self.grid_columns, axis=0)
        self.usable = self.grid_norms > 1e-14 * max(float(self.grid_norms.max(initial=0.0)), 1e-300)

        self.y = problem.y
        self.yy = float(np.real(np.vdot(self.y, self.y)))
        complex_valued = np.iscomplexobj(self.y) or np.iscomplexobj(self.grid_columns)
        self.active = _ActiveSet(coefficients=np.zeros(0, dtype=complex if complex_valued else float))
        self.iterations = 0
        self.history: List[IterationRecord] = []

    def residual_vector(self) -> np.ndarray:
        return self.y - self.active.matrix(self.y.shape[0]) @ self.active.coefficients

    def residual(self) -> float:
        return float(np.linalg.norm(self.residual_vector()))

    def snapshot(self, lam: float) -> _Snapshot:
        return _Snapshot(self.active.copy(), lam, self.residual())

    def restore(self, snapshot: _Snapshot) -> None:
        self.active = snapshot.active.copy()

    def _violators(self, lam: float, residual_vector: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        correlations = np.conj(self.grid_columns).T @ residual_vector
        violating = self.usable & (2.0 * np.abs(correlations) > lam * (1.0 + settings.KKT_TOLERANCE))
        active_grid = [i for i in self.active.grid_index if i >= 0]
        violating[np.asarray(active_grid, dtype=int)] = False
        return correlations, np.flatnonzero(violating)

    def _add(self, order: np.ndarray, residual_vector: np.ndarray) -> None:
        for index in order:
            self.active.append(self.grid[index], self.grid_columns[:, index], int(index))

        # local refinement of the best-scoring atom enters alongside its grid point
        best = self.grid[order[0]]

        def criterion(atom):
            column = self.problem.column(atom)
            length = np.linalg.norm(column)
            return float(np.abs(np.vdot(column, residual_vector)) / length) if length > 0 else 0.0

        refined, _ = refine_atom(best, criterion, self.config)
        if refined != best and refined not in self.active.atoms:
            self.active.append(refined, self.problem.column(refined), -1)

    def _fit(self, lam: float) -> None:
        matrix = self.active.matrix(self.y.shape[0])
        gram = np.conj(matrix).T @ matrix
        rhs = np.conj(matrix).T @ self.y
        coefficients = lasso_coordinate_descent(gram, rhs, self.active.coefficients, lam)
        self.active.coefficients = coefficients.astype(self.active.coefficients.dtype)
        self.active.drop_zeros()

    def solve(self, lam: float) -> bool:
        """Grid-certified solution at lam, warm-started from the current working set; False if the budget ran out"""
        while True:
            residual_vector = self.residual_vector()
            correlations, candidates = self._violators(lam, residual_vector)
            if candidates.size == 0:
                return True
            if self.iterations >= self.budget:
                return False
            self.iterations += 1

            scores = np.abs(correlations[candidates]) / self.grid_norms[candidates]
            # stable sort keeps the lowest grid index first among ties
            order = candidates[np.argsort(-scores, kind="stable")][: settings.PRICING_BATCH]
            self._add(order, residual_vector)
            self._fit(lam)

            record = IterationRecord(
                iteration=self.iterations,
                residual=self.residual(),
                mass=float(np.abs(self.active.coefficients).sum()),
                atoms=len(self.active.atoms),
                lam=float(lam),
            )
            self.history.append(record)
            logger.debug(
                f"iteration {record.iteration}: residual={record.residual:.3e} "
                f"mass={record.mass:.6g} atoms={record.atoms} lam={lam:.3e}"
            )


def _solve(solver: _GridLasso, lam0: float, eps: float) -> Tuple[bool, float]:
    """
    Geometric lambda schedule from lam0 to the first feasible value, then bisection
    against the last infeasible one. Larger lambda means smaller mass, so the
    largest feasible lambda found gives the reported upper bound.
    Returns (certified, lam) with the solver left at the accepted solution.
    """
    decay = settings.LAMBDA_DECAY
    lam = lam0
    if not solver.solve(lam):
        return False, lam

    if solver.residual() <= eps:
        best = solver.snapshot(lam)
        # the mass shrinks while lambda grows; the zero solution at large lambda is infeasible
        while True:
            trial = best.lam / decay
            if not solver.solve(trial):
                solver.restore(best)
                return True, best.lam
            if solver.residual() > eps:
                infeasible = trial
                solver.restore(best)
                break
            best = solver.snapshot(trial)
    else:
        infeasible = lam
        while True:
            lam *= decay
            if lam < settings.LAMBDA_FLOOR:
                return True, infeasible
            if not solver.solve(lam):
                return False, lam
            if solver.residual() <= eps:
                best = solver.snapshot(lam)
                break
            infeasible = lam

    for _ in range(settings.LAMBDA_BISECTION_STEPS):
        middle = math.sqrt(best.lam * infeasible)
        certified = solver.solve(middle)
        if certified and solver.residual() <= eps:
            best = solver.snapshot(middle)
            continue
        solver.restore(best)
        if not certified:
            break
        infeasible = middle

    solver.restore(best)
    return True, best.lam


def _default_eps(f_norm: float, eps: Optional[float]) -> float:
    if eps is None:
        return settings.DEFAULT_EPS_FRACTION * f_norm
    if eps <= 0:
        raise ConfigurationError(f"residual tolerance must be positive, got {eps}", loc="solver.eps")
    return float(eps)


def _estimate(
    f: GridFunction,
    config: DictionaryConfig,
    eps: Optional[float],
    budget: Optional[int],
    basis: Optional[np.ndarray] = None,
) -> Tuple[EstimateReport, SparseCombination, WeightedProblem]:
    started = time.perf_counter()
    budget = budget or settings.DEFAULT_BUDGET
    f_norm = norm_l2(f)
    eps = _default_eps(f_norm, eps)
    problem = WeightedProblem(f.quadrature, f.values, basis)

    if float(np.linalg.norm(problem.y)) <= eps:
        report = EstimateReport(
            family=config.family,
            upper=0.0,
            residual=float(np.linalg.norm(problem.y)),
            eps=eps,
            iterations=0,
            atom_count=0,
            wall_time=time.perf_counter() - started,
            success=True,
            valid_gauge_estimate=True,
            message="target within tolerance of zero",
        )
        return report, SparseCombination.empty(), problem

    solver = _GridLasso(problem, config, budget)
    certified, lam = _solve(solver, settings.LAMBDA_START_FRACTION * f_norm, eps)
    active = solver.active
    combination = SparseCombination(tuple(active.atoms), active.coefficients)
    residual = solver.residual()
    feasible = residual <= eps * (1.0 + 1e-9)
    success = certified and feasible
    if success:
        message = "converged"
    elif not certified:
        message = f"budget of {budget} iterations exhausted before the grid optimality check passed (residual {residual:.3e}, eps {eps:.3e})"
    else:
        message = f"lambda floor reached with residual {residual:.3e} > eps {eps:.3e}"

    report = EstimateReport(
        family=config.family,
        upper=combination.mass,
        residual=residual,
        eps=eps,
        iterations=solver.iterations,
        atom_count=combination.size,
        wall_time=time.perf_counter() - started,
        success=success,
        valid_gauge_estimate=success,
        message=message,
        history=solver.history,
    )
    if success:
        logger.info(
            f"✅ {config.family} upper bound {report.upper:.6g} with {report.atom_count} atoms, "
            f"residual {residual:.3e}, lambda {lam:.3e}"
        )
    else:
        logger.warning(f"❌ {config.family} solver: {message}")
    return report, combination, problem


def variation_upper(
    f: GridFunction,
    config: DictionaryConfig,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> Tuple[EstimateReport, SparseCombination]:
    """Smallest-mass combination found with ||synth - f|| <= eps; its mass bounds ||f||_D from above"""
    report, combination, _ = _estimate(f, config, eps, budget)
    return report, combination


# ============================================================================
# DUAL LOWER BOUND
# ============================================================================

def variation_lower(
    f: GridFunction,
    config: DictionaryConfig,
    certificate: GridFunction,
    eps: Optional[float] = None,
) -> LowerBoundReport:
    """||f||_D >= |<f,g>| / sup_h |<h,g>|, the sup taken over the grid with local refinement"""
    if not f.quadrature.same_as(certificate.quadrature):
        raise ContractViolation("target and certificate live on different quadratures")

    problem = WeightedProblem(certificate.quadrature, certificate.values)
    g = problem.y
    if float(np.linalg.norm(g)) == 0.0:
        raise ContractViolation("dual certificate must be nonzero")

    grid = grid_atoms(config)
    correlations = np.abs(np.conj(problem.columns(grid)).T @ g)
    best = int(np.argmax(correlations))
    sup_grid = float(correlations[best])

    def criterion(atom):
        return float(np.abs(np.vdot(problem.column(atom), g)))

    _, sup_refined = refine_atom(grid[best], criterion, config)
    sup_value = max(sup_grid, sup_refined)
    if sup_value == 0.0:
        raise ContractViolation("certificate is orthogonal to every dictionary atom")

    weighted_f = problem.sqrt_w * f.values
    value = float(np.abs(np.vdot(g, weighted_f))) / sup_value
    f_norm = norm_l2(f)
    eps = _default_eps(f_norm, eps) if f_norm > 0 else 0.0
    return LowerBoundReport(
        value=value,
        sup_grid=sup_grid,
        sup_refined=sup_value,
        slack=eps * float(np.linalg.norm(g)) / sup_value,
    )


def estimate_with_certificate(
    f: GridFunction,
    config: DictionaryConfig,
    certificate: Optional[GridFunction] = None,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> Tuple[EstimateReport, SparseCombination]:
    """variation_upper plus a dual lower bound (certificate defaults to f itself)"""
    report, combination = variation_upper(f, config, eps, budget)
    if norm_l2(f) == 0.0:
        return report, combination
    lower = variation_lower(f, config, certificate if certificate is not None else f, report.eps)
    return report.model_copy(update={"lower": lower.value, "lower_slack": lower.slack}), combination


# ============================================================================
# QUOTIENT NORM MODULO POLYNOMIALS
# ============================================================================

def monomial_exponents(dim: int, degree: int) -> List[Tuple[int, ...]]:
    """Exponent tuples of all monomials of total degree <= degree"""
    exponents = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            exponents.append(tuple(combo.count(axis) for axis in range(dim)))
    return exponents


def monomial_matrix(points: np.ndarray, degree: int) -> np.ndarray:
    points = np.atleast_2d(points)
    exponents = monomial_exponents(points.shape[1], degree)
    return np.column_stack([np.prod(points ** np.asarray(e), axis=1) for e in exponents])


def polynomial_fit(f: GridFunction, degree: int) -> GridFunction:
    """L2(Omega)-orthogonal projection of f onto polynomials of total degree <= degree"""
    sqrt_w = np.sqrt(f.quadrature.weights)
    design = sqrt_w[:, None] * monomial_matrix(f.quadrature.nodes, degree)
    coefficients, *_ = np.linalg.lstsq(design, sqrt_w * f.values, rcond=None)
    return GridFunction(f.quadrature, monomial_matrix(f.quadrature.nodes, degree) @ coefficients)


def quotient_variation_upper(
    f: GridFunction,
    config: DictionaryConfig,
    k: Optional[int] = None,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> Tuple[EstimateReport, SparseCombination, GridFunction]:
    """inf over polynomials p of degree <= k of ||f + p||_D, with the polynomial fitted unpenalized"""
    if config.family != "P_k":
        raise ConfigurationError("quotient norms are defined for ridge dictionaries", loc="dictionary.family")
    k = config.k if k is None else k

    sqrt_w = np.sqrt(f.quadrature.weights)
    basis, _ = np.linalg.qr(sqrt_w[:, None] * monomial_matrix(f.quadrature.nodes, k))
    report, combination, _ = _estimate(f, config, eps, budget, basis=basis)
    polynomial = polynomial_fit(f - synth(combination, f.quadrature), k)
    return report, combination, polynomial


# ============================================================================
# DISCRETE-MEASURE SYNTHESIS
# ============================================================================

@dataclass(frozen=True)
class RadonSynthesis:
    """(1/k!) sum a_i [sigma_k(w_i.x + b_i) - (w_i.x + b_i)^k] split into ridge and polynomial parts"""

    values: GridFunction
    in_range: SparseCombination
    polynomial: GridFunction


def radon_style_synthesis(
    measure: SparseCombination,
    k: int,
    config: DictionaryConfig,
    quadrature: Quadrature,
) -> RadonSynthesis:
    if k < 0:
        raise ContractViolation(f"k must be >= 0, got {k}")
    factorial = math.factorial(k)
    nodes = quadrature.nodes
    in_atoms, in_coefficients = [], []
    polynomial = np.zeros(quadrature.size)

    for atom, a in zip(measure.atoms, measure.coefficients):
        t = nodes @ np.asarray(atom.omega) + atom.b
        if atom.b > config.c2:
            # sigma_k(t) = t^k on the box, the term vanishes
            continue
        polynomial = polynomial - a * t ** k / factorial
        if atom.b >= config.c1:
            in_atoms.append(RidgeAtom(k, atom.omega, atom.b))
            in_coefficients.append(a / factorial)

    in_range = SparseCombination(tuple(in_atoms), np.array(in_coefficients, dtype=float))
    polynomial_part = GridFunction(quadrature, polynomial)
    total = synth(in_range, quadrature) + polynomial_part
    return RadonSynthesis(values=total, in_range=in_range, polynomial=polynomial_part)


# ============================================================================
# CONVERSE OF THE SAMPLING BOUND
# ============================================================================

@dataclass(frozen=True)
class ConverseCheck:
    bound: float
    upper: float
    distances: Tuple[float, ...]
    report: EstimateReport


def converse_maurey_check(
    combinations: Sequence[SparseCombination],
    f: GridFunction,
    config: DictionaryConfig,
    bound: Optional[float] = None,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> ConverseCheck:
    """Combinations of mass <= M converging to f certify ||f||_D <= M"""
    if not combinations:
        raise ContractViolation("need at least one combination")
    masses = [c.mass for c in combinations]
    bound = max(masses) if bound is None else float(bound)
    if max(masses) > bound * (1.0 + 1e-12):
        raise ContractViolation(f"combination mass {max(masses):.6g} exceeds bound {bound:.6g}")

    distances = tuple(norm_l2(synth(c, f.quadrature) - f) for c in combinations)
    floor = 1e-9 * max(norm_l2(f), 1.0)
    if distances[-1] > max(0.5 * distances[0], floor):
        raise ContractViolation(
            f"sequence does not converge to f: distances {distances[0]:.3e} -> {distances[-1]:.3e}"
        )

    report, _ = variation_upper(f, config, eps, budget)
    if report.upper > bound * settings.NORM_SAFETY_FACTOR + 1e-12:
        raise SolverFailure(
            f"variation estimate {report.upper:.6g} exceeds the limit bound {bound:.6g}", result=report
        )
    return ConverseCheck(bound=bound, upper=report.upper, distances=distances, report=report)


# ============================================================================
# BARRON / P_1 BRACKET
# ============================================================================

@dataclass(frozen=True)
class BarronBracket:
    ridge_upper: float
    barron_upper: float
    embedding_constant: float

    @property
    def barron_over_ridge(self) -> float:
        return self.barron_upper / self.ridge_upper if self.ridge_upper > 0 else 0.0

    @property
    def ridge_over_barron(self) -> float:
        return self.ridge_upper / self.barron_upper if self.barron_upper > 0 else 0.0

    @property
    def within_constants(self) -> bool:
        slack = settings.NORM_SAFETY_FACTOR
        return self.barron_over_ridge <= self.embedding_constant * slack and self.ridge_over_barron <= 4.0 * slack


def barron_norm_bracket(
    f: GridFunction,
    config: DictionaryConfig,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> BarronBracket:
    """Estimate ||f||_{P_1} and ||f||_B and compare with the equivalence constants 4 and sqrt(d) + max|c|"""
    if config.family != "P_k" or config.k != 1:
        raise ConfigurationError("bracket needs a P_1 dictionary", loc="dictionary")
    barron_config = config.model_copy(update={"family": "B"})
    ridge_report, _ = variation_upper(f, config, eps, budget)
    barron_report, _ = variation_upper(f, barron_config, eps, budget)
    return BarronBracket(
        ridge_upper=ridge_report.upper,
        barron_upper=barron_report.upper,
        embedding_constant=math.sqrt(config.dim) + max(abs(config.c1), abs(config.c2)),
    )


def l2_embedding_bound(f: GridFunction, config: DictionaryConfig, upper: float) -> float:
    """K_D * upper, the bound on ||f||_L2 implied by a variation estimate"""
    return atom_norm_bound(config, f.quadrature) * upper
