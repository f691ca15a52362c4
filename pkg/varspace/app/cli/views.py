"""
Experiment configs and subcommand handlers. Each handler validates its
sub-configs, runs one experiment and writes its artifacts through the store.
"""

import logging
import math
from contextlib import contextmanager
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from app.cli.utils import build_target
from app.dictionaries.service import (
    DictionaryConfig,
    atom_norm_bound,
    barron_decomposition_experiment,
    validate_offsets,
)
from app.domain.service import BoxDomain, build_quadrature, norm_l2
from app.errors import CheckFailure, ConfigurationError
from app.greedy.service import benchmark_combination, maurey_rate_series
from app.onedim.service import default_suite, equivalence_experiment
from app.records.atoms import save_combination
from app.records.estimate_reports import save_estimate_report
from app.records.rate_series import save_rate_series
from app.spectral.service import build_cutoff, fs_equality_table, pair_from_manifest
from app.varnorm.service import estimate_with_certificate
from config import settings

logger = logging.getLogger(__name__)

Experiment = Literal["estimate-norm", "maurey-rate", "onedim-equiv", "spectral-equiv", "cutoff", "barron-decomp"]


# ============================================================================
# REQUEST MODELS
# ============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QuadratureSpec(_Strict):
    kind: Literal["tensor", "composite", "qmc"] = "tensor"
    level: int = Field(32, ge=1)
    order: Optional[int] = Field(None, ge=1)


class SolverSpec(_Strict):
    eps: Optional[float] = Field(None, gt=0)
    eps_fraction: Optional[float] = Field(None, gt=0)
    budget: Optional[int] = Field(None, ge=1)
    lambda_floor: Optional[float] = Field(None, gt=0)


class TargetSpec(_Strict):
    name: Literal["atom", "identity", "gaussian", "benchmark", "combination"] = "atom"
    path: Optional[str] = None
    atoms: int = Field(10, ge=1)
    sigma: float = Field(1.0, gt=0)
    seed: Optional[int] = None
    omega: Optional[List[float]] = None
    b: float = 0.0
    xi: Optional[List[float]] = None


class MaureySpec(_Strict):
    n_values: List[int] = Field(default_factory=lambda: [4, 16, 64, 256], min_length=3)
    trials: int = Field(20, ge=1)
    benchmark_atoms: int = Field(50, ge=1)
    include_greedy: bool = False
    slope_limit: float = -0.4


class OnedimSpec(_Strict):
    level: int = Field(32, ge=2)
    window: float = Field(10.0, gt=1)
    refinement_tolerance: float = Field(0.2, gt=0)
    functions: Optional[List[str]] = None
    c1: float = -2.0
    c2: float = 2.0
    offsets: int = Field(41, ge=2)

    # the suite lives on [-1, 1]
    @field_validator("c1")
    @classmethod
    def _c1_below_interval(cls, c1: float) -> float:
        check = validate_offsets(BoxDomain.cube(1), c1, math.inf)
        if check.lower_margin <= 0:
            raise ValueError(f"c1 must be below {check.inf_projection:.6g}, got {c1}")
        return c1

    @field_validator("c2")
    @classmethod
    def _c2_above_interval(cls, c2: float) -> float:
        check = validate_offsets(BoxDomain.cube(1), -math.inf, c2)
        if check.upper_margin <= 0:
            raise ValueError(f"c2 must be above {check.sup_projection:.6g}, got {c2}")
        return c2


class SpectralSpec(_Strict):
    pair: Dict[str, Any] = Field(default_factory=lambda: {"family": "gaussian", "params": {"sigma": 1.0}, "dim": 1})
    s_values: List[float] = Field(default_factory=lambda: [0.0, 1.0], min_length=1)
    level: int = Field(64, ge=1)
    slack: float = Field(0.1, ge=0)


class CutoffSpec(_Strict):
    R_values: List[float] = Field(default_factory=lambda: [1.0, 10.0, 100.0], min_length=1)
    s: float = Field(1.0, ge=0)
    L: float = Field(1.0, gt=0)
    k: Optional[int] = Field(None, ge=1)

    @field_validator("R_values")
    @classmethod
    def _positive_radii(cls, values: List[float]) -> List[float]:
        if any(R <= 0 for R in values):
            raise ValueError(f"every R must be positive, got {values}")
        return values

    @field_validator("k")
    @classmethod
    def _enough_smoothness(cls, k: Optional[int], info: ValidationInfo) -> Optional[int]:
        s = info.data.get("s")
        if k is not None and s is not None and k <= s + 2:
            raise ValueError(f"smoothness k must exceed s + 2, got k={k}, s={s}")
        return k


class BarronSpec(_Strict):
    dims: List[int] = Field(default_factory=lambda: [1, 2, 4, 8], min_length=1)
    count: int = Field(1000, ge=1)
    points: int = Field(2000, ge=1)


class ExperimentConfig(_Strict):
    experiment: Experiment
    dictionary: Optional[DictionaryConfig] = None
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    target: TargetSpec = Field(default_factory=TargetSpec)
    seed: int = 0
    output_dir: Optional[str] = None
    maurey: MaureySpec = Field(default_factory=MaureySpec)
    onedim: OnedimSpec = Field(default_factory=OnedimSpec)
    spectral: SpectralSpec = Field(default_factory=SpectralSpec)
    cutoff: CutoffSpec = Field(default_factory=CutoffSpec)
    barron: BarronSpec = Field(default_factory=BarronSpec)


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw config; field errors come back with dotted paths"""
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        errors = [
            {"loc": ".".join(str(part) for part in error["loc"]) or "config", "msg": error["msg"]}
            for error in exc.errors()
        ]
        raise ConfigurationError(f"invalid experiment config ({len(errors)} error(s))", errors=errors) from exc


def _require_dictionary(config: ExperimentConfig, family: Optional[str] = None) -> DictionaryConfig:
    if config.dictionary is None:
        raise ConfigurationError(f"{config.experiment} needs a dictionary section", loc="dictionary")
    if family is not None and config.dictionary.family != family:
        raise ConfigurationError(
            f"{config.experiment} needs family {family}, got {config.dictionary.family}", loc="dictionary.family"
        )
    return config.dictionary


@contextmanager
def solver_settings(solver: SolverSpec):
    """Temporarily apply per-run solver overrides to the settings singleton"""
    saved = settings.LAMBDA_FLOOR
    if solver.lambda_floor is not None:
        settings.LAMBDA_FLOOR = solver.lambda_floor
    try:
        yield
    finally:
        settings.LAMBDA_FLOOR = saved


# ============================================================================
# HANDLERS
# ============================================================================

def cmd_estimate_norm(config: ExperimentConfig, store) -> int:
    """Upper/lower bracket of the variation norm of one target"""
    dictionary = _require_dictionary(config)
    q = config.quadrature
    quadrature = build_quadrature(dictionary.domain, q.level, q.kind, q.order)
    target = config.target
    f, known_mass = build_target(
        target.name,
        dictionary,
        quadrature,
        path=target.path,
        atoms=target.atoms,
        sigma=target.sigma,
        seed=config.seed if target.seed is None else target.seed,
        omega=target.omega,
        b=target.b,
        xi=target.xi,
    )

    eps = config.solver.eps
    if eps is None and config.solver.eps_fraction is not None:
        eps = config.solver.eps_fraction * norm_l2(f)
    with solver_settings(config.solver):
        report, combination = estimate_with_certificate(f, dictionary, eps=eps, budget=config.solver.budget)

    extra = {"target": target.name, "known_mass": known_mass}
    if known_mass:
        extra["mass_ratio"] = report.upper / known_mass
    save_estimate_report(store, report, extra)
    save_combination(store, combination)
    logger.info(f"estimate-norm: upper {report.upper:.6g}, lower {report.lower:.6g}")
    report.raise_for_status()
    return 0


def cmd_maurey_rate(config: ExperimentConfig, store) -> int:
    """Maurey sampling errors against K_D * M / sqrt(n) on the fixed benchmark"""
    dictionary = _require_dictionary(config, "P_k")
    spec = config.maurey
    q = config.quadrature
    quadrature = build_quadrature(dictionary.domain, q.level, q.kind, q.order)
    representation = benchmark_combination(dictionary, spec.benchmark_atoms, config.seed)
    norm_bound = atom_norm_bound(dictionary, quadrature)
    seeds = [config.seed + i for i in range(spec.trials)]

    series = maurey_rate_series(
        representation,
        quadrature,
        norm_bound,
        spec.n_values,
        seeds,
        greedy_config=dictionary if spec.include_greedy else None,
    )
    summary = save_rate_series(store, series, representation.mass, norm_bound)
    save_combination(store, representation, "benchmark.json")

    if not summary["below_bound"] or series.slope > spec.slope_limit:
        raise CheckFailure(
            f"Maurey check failed: slope {series.slope:.3f} (limit {spec.slope_limit}), below bound {summary['below_bound']}",
            details=summary,
        )
    return 0


def cmd_onedim_equiv(config: ExperimentConfig, store) -> int:
    """Characterization norm against the P_k upper bound on the 1D suite"""
    spec = config.onedim
    suite = default_suite()
    if spec.functions is not None:
        known = {entry.function_id for entry in suite}
        unknown = sorted(set(spec.functions) - known)
        if unknown:
            raise ConfigurationError(f"unknown suite functions {unknown}", loc="onedim.functions")
        suite = [entry for entry in suite if entry.function_id in spec.functions]

    eps_fraction = config.solver.eps_fraction
    with solver_settings(config.solver):
        table = equivalence_experiment(
            suite,
            level=spec.level,
            window=spec.window,
            refinement_tolerance=spec.refinement_tolerance,
            c1=spec.c1,
            c2=spec.c2,
            offsets=spec.offsets,
            eps_fraction=eps_fraction,
            budget=config.solver.budget,
        )
    store.write_csv("onedim_equivalence.csv", table)
    return 0


def cmd_spectral_equiv(config: ExperimentConfig, store) -> int:
    """F_s upper bound against the spectral norm of the given extension"""
    dictionary = _require_dictionary(config, "F_s")
    spec = config.spectral
    pair = pair_from_manifest(spec.pair)
    with solver_settings(config.solver):
        table = fs_equality_table(
            pair, spec.s_values, dictionary, level=spec.level, slack=spec.slack,
            eps=config.solver.eps, budget=config.solver.budget,
        )
    store.write_csv("spectral_equivalence.csv", table)
    return 0


def cmd_cutoff(config: ExperimentConfig, store) -> int:
    """Cutoff totals over the R sweep"""
    spec = config.cutoff
    rows = [build_cutoff(R, spec.s, spec.L, spec.k).as_row() for R in spec.R_values]
    frame = pd.DataFrame(rows)
    totals = frame["total"].tolist()
    frame["decreasing"] = [True] + [b < a for a, b in zip(totals, totals[1:])]
    store.write_csv("cutoff.csv", frame)
    return 0


def cmd_barron_decomp(config: ExperimentConfig, store) -> int:
    """B -> P_1 decompositions and P_1 -> B embeddings of random atoms"""
    spec = config.barron
    rows, summary = barron_decomposition_experiment(spec.dims, spec.count, config.seed, spec.points)
    store.write_csv("barron_decomposition.csv", rows)
    store.write_csv("barron_summary.csv", summary)
    return 0


COMMANDS = {
    "estimate-norm": cmd_estimate_norm,
    "maurey-rate": cmd_maurey_rate,
    "onedim-equiv": cmd_onedim_equiv,
    "spectral-equiv": cmd_spectral_equiv,
    "cutoff": cmd_cutoff,
    "barron-decomp": cmd_barron_decomp,
}
