"""
One-dimensional characterization of the ridge variation space: the BV-side
norm, exact and Peano-kernel representations over sigma_k atoms, and the
two-sided equivalence experiment.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg

from app.dictionaries.atoms import RidgeAtom
from app.dictionaries.service import DictionaryConfig
from app.domain.service import BoxDomain, Quadrature, build_quadrature, norm_l2, sample
from app.errors import ConfigurationError, ContractViolation, VarspaceError
from app.onedim.utils import (
    PiecewisePolynomial,
    ProfileFunction,
    SmoothProfile,
    adaptive_total_variation,
)
from app.varnorm.combination import SparseCombination
from app.varnorm.service import synth, variation_upper

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
PEANO_PANELS = 1024
PEANO_ORDER = 2


# ============================================================================
# NORMS
# ============================================================================

def bv_norm(g) -> float:
    """|g(-1)| + TV(g) on [-1, 1]; exact for piecewise polynomials"""
    if isinstance(g, PiecewisePolynomial):
        return abs(float(g(-1.0))) + g.total_variation()
    value = float(np.asarray(g(np.array([-1.0])))[0])
    return abs(value) + adaptive_total_variation(g)


def _check_lower_order_continuity(f: PiecewisePolynomial, k: int) -> None:
    for j in range(k):
        jumps = f.jumps(j)
        if jumps.size and np.max(np.abs(jumps)) > 1e-12:
            worst = int(np.argmax(np.abs(jumps)))
            raise ContractViolation(
                f"{f.name}: derivative {j} jumps by {jumps[worst]:.3g} at x={f.breakpoints[worst]}; "
                f"f^({j}) must be continuous for order {k}"
            )


def characterization_norm(f: ProfileFunction, k: int) -> float:
    """sum_{j<k} |f^(j)(-1)| + ||f^(k)||_BV"""
    if k < 0:
        raise ContractViolation(f"k must be >= 0, got {k}")
    if isinstance(f, PiecewisePolynomial):
        _check_lower_order_continuity(f, k)
    boundary = sum(abs(float(f.value_at(np.array([-1.0]), j)[0])) for j in range(k))
    return float(boundary + bv_norm(f.derivative(k)))


# ============================================================================
# REPRESENTATIONS
# ============================================================================

@dataclass(frozen=True)
class PeanoSynthesis:
    combination: SparseCombination
    boundary: SparseCombination
    kernel: SparseCombination
    offsets: tuple
    condition: float
    constant: float


def _boundary_part(taylor: Sequence[float], k: int, c2: float):
    """sum_j taylor[j] (x+1)^j as k+1 atoms sigma_k(x + b_i), b_i equispaced in [1 + delta, c2]"""
    if c2 <= 1.0:
        raise ConfigurationError(f"c2 must exceed 1 for the boundary atoms, got {c2}", loc="dictionary.c2")
    delta = (c2 - 1.0) / 10.0
    offsets = np.linspace(1.0 + delta, c2, k + 1)
    shifts = offsets - 1.0
    # (u + shift)^k = sum_m C(k, m) shift^(k-m) u^m with u = x + 1
    vandermonde = np.array([[math.comb(k, m) * s ** (k - m) for s in shifts] for m in range(k + 1)])
    condition = float(np.linalg.cond(vandermonde))
    if condition > MAX_CONDITION:
        raise ContractViolation(
            f"boundary system condition {condition:.3e} exceeds {MAX_CONDITION:.0e}",
            details={"offsets": offsets.tolist(), "condition": condition},
        )
    coefficients = linalg.solve(vandermonde, np.asarray(taylor, dtype=float))
    atoms = tuple(RidgeAtom(k, (1.0,), b) for b in offsets)
    return SparseCombination(atoms, coefficients).pruned(0.0), tuple(offsets.tolist()), condition


def _taylor_at_left_end(f: ProfileFunction, k: int) -> List[float]:
    return [float(f.value_at(np.array([-1.0]), j)[0]) / math.factorial(j) for j in range(k + 1)]


def _with_constant(combination: SparseCombination, f: ProfileFunction, k: int) -> float:
    norm = characterization_norm(f, k)
    return combination.mass / norm if norm > 0 else 0.0


def peano_synthesis(
    f: ProfileFunction,
    k: int,
    quadrature: Optional[Quadrature] = None,
    c2: float = 2.0,
) -> PeanoSynthesis:
    """Boundary Taylor atoms plus int f^(k+1)(b)/k! sigma_k(x - b) db discretized on a 1D b-rule"""
    if k < 0:
        raise ContractViolation(f"k must be >= 0, got {k}")
    if isinstance(f, SmoothProfile) and f.order < k + 1:
        raise ContractViolation(f"{f.name}: Peano synthesis of order {k} needs {k + 1} derivatives, got {f.order}")
    if quadrature is None:
        quadrature = build_quadrature(BoxDomain.cube(1), PEANO_PANELS, "composite", order=PEANO_ORDER)
    if quadrature.domain.dim != 1:
        raise ContractViolation("Peano kernel rule must be one-dimensional")

    boundary, offsets, condition = _boundary_part(_taylor_at_left_end(f, k), k, c2)

    b = quadrature.nodes[:, 0]
    density = np.asarray(f.value_at(b, k + 1), dtype=float) / math.factorial(k)
    kernel = SparseCombination(
        tuple(RidgeAtom(k, (1.0,), -node) for node in b), quadrature.weights * density
    ).pruned(0.0)

    combination = boundary.concat(kernel)
    constant = _with_constant(combination, f, k)
    logger.debug(
        f"Peano synthesis of {getattr(f, 'name', 'f')} (k={k}): {boundary.size} boundary + {kernel.size} kernel atoms, "
        f"mass {combination.mass:.6g}, condition {condition:.2e}"
    )
    return PeanoSynthesis(combination, boundary, kernel, offsets, condition, constant)


def piecewise_synthesis(f: PiecewisePolynomial, k: int, c2: float = 2.0) -> PeanoSynthesis:
    """Exact representation: boundary atoms from the first piece plus one sigma_k atom per breakpoint"""
    if f.degree > k:
        raise ContractViolation(f"{f.name}: pieces of degree {f.degree} exceed k={k}")
    _check_lower_order_continuity(f, k)

    boundary, offsets, condition = _boundary_part(_taylor_at_left_end(f, k), k, c2)
    jumps = f.jumps(k) / math.factorial(k)
    kernel = SparseCombination(
        tuple(RidgeAtom(k, (1.0,), -t) for t in f.breakpoints), jumps
    ).pruned(0.0)

    combination = boundary.concat(kernel)
    return PeanoSynthesis(combination, boundary, kernel, offsets, condition, _with_constant(combination, f, k))


def represent(f: ProfileFunction, k: int, c2: float = 2.0) -> PeanoSynthesis:
    if isinstance(f, PiecewisePolynomial) and f.degree <= k:
        return piecewise_synthesis(f, k, c2)
    return peano_synthesis(f, k, c2=c2)


def synthesis_residual(result: PeanoSynthesis, f: ProfileFunction, quadrature: Quadrature) -> float:
    """||synth(representation) - f||_L2 on the given 1D rule"""
    target = sample(lambda points: f(points[:, 0]), quadrature)
    return norm_l2(synth(result.combination, quadrature) - target)


# ============================================================================
# EQUIVALENCE EXPERIMENT
# ============================================================================

@dataclass(frozen=True)
class SuiteEntry:
    function_id: str
    profile: ProfileFunction
    k: int


def default_suite() -> List[SuiteEntry]:
    exp = SmoothProfile(np.exp, (np.exp, np.exp, np.exp), name="exp")
    log = SmoothProfile(
        lambda x: np.log(2.0 + x),
        (
            lambda x: 1.0 / (2.0 + x),
            lambda x: -1.0 / (2.0 + x) ** 2,
            lambda x: 2.0 / (2.0 + x) ** 3,
        ),
        name="log2px",
    )
    return [
        SuiteEntry("exp", exp, 1),
        SuiteEntry("log2px", log, 1),
        SuiteEntry("sigma_1", PiecewisePolynomial.relu_power(1), 1),
        SuiteEntry("sigma_2", PiecewisePolynomial.relu_power(2), 2),
        SuiteEntry("identity", PiecewisePolynomial.polynomial([0.0, 1.0], name="identity"), 1),
        SuiteEntry("square", PiecewisePolynomial.polynomial([0.0, 0.0, 1.0], name="square"), 2),
        SuiteEntry("cubic", PiecewisePolynomial.polynomial([0.0, -1.0, 0.0, 1.0], name="cubic"), 2),
        SuiteEntry(
            "zigzag",
            PiecewisePolynomial.linear_spline([-1.0, -0.5, 0.0, 0.5, 1.0], [0.0, 0.5, 0.0, 0.5, 0.0], name="zigzag"),
            1,
        ),
    ]


def ridge_config(k: int, c1: float = -2.0, c2: float = 2.0, offsets: int = 41) -> DictionaryConfig:
    return DictionaryConfig(family="P_k", domain=BoxDomain.cube(1), k=k, c1=c1, c2=c2, offsets=offsets)


def _upper(profile: ProfileFunction, config: DictionaryConfig, level: int, eps_fraction, budget) -> float:
    quadrature = build_quadrature(config.domain, level)
    f = sample(lambda points: profile(points[:, 0]), quadrature)
    eps = eps_fraction * norm_l2(f) if eps_fraction else None
    report, _ = variation_upper(f, config, eps=eps, budget=budget)
    report.raise_for_status()
    return report.upper


def equivalence_experiment(
    suite: Sequence[SuiteEntry],
    level: int = 32,
    window: float = 10.0,
    refinement_tolerance: float = 0.2,
    c1: float = -2.0,
    c2: float = 2.0,
    offsets: int = 41,
    eps_fraction: Optional[float] = None,
    budget: Optional[int] = None,
) -> pd.DataFrame:
    """Per function: characterization norm, P_k upper bound at levels L and 2L, their ratio and stability"""
    if not suite:
        raise ContractViolation("equivalence experiment needs a nonempty suite")

    rows = []
    for entry in suite:
        config = ridge_config(entry.k, c1, c2, offsets)
        row = {"function_id": entry.function_id, "k": entry.k, "window": window}
        try:
            characterization = characterization_norm(entry.profile, entry.k)
            representation = represent(entry.profile, entry.k, c2)
            upper = _upper(entry.profile, config, level, eps_fraction, budget)
            refined = _upper(entry.profile, config, 2 * level, eps_fraction, budget)
            ratio = upper / characterization if characterization > 0 else float("nan")
            refined_ratio = refined / characterization if characterization > 0 else float("nan")
            refinement_ratio = refined_ratio / ratio if ratio > 0 else float("nan")
            within = bool(
                1.0 / window <= ratio <= window and abs(refinement_ratio - 1.0) < refinement_tolerance
            )
            row.update(
                characterization_norm=characterization,
                variation_upper=upper,
                representation_mass=representation.combination.mass,
                ratio=ratio,
                refinement_ratio=refinement_ratio,
                within_window=within,
                status="ok" if within else "outside_window",
            )
            logger.info(f"{'✅' if within else '❌'} {entry.function_id} (k={entry.k}): ratio {ratio:.4f}")
        except VarspaceError as exc:
            logger.warning(f"❌ {entry.function_id} (k={entry.k}): {exc}")
            row.update(
                characterization_norm=float("nan"),
                variation_upper=float("nan"),
                representation_mass=float("nan"),
                ratio=float("nan"),
                refinement_ratio=float("nan"),
                within_window=False,
                status=f"{type(exc).__name__}: {exc}",
            )
        rows.append(row)

    columns = [
        "function_id", "k", "characterization_norm", "variation_upper", "representation_mass",
        "ratio", "refinement_ratio", "window", "within_window", "status",
    ]
    return pd.DataFrame(rows, columns=columns)
