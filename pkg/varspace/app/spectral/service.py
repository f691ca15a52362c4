"""
Fourier-side norms: the spectral Barron integral, the Gaussian cutoff
construction and its correction term, and the comparison against the F_s
variation norm of the restricted function.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy import integrate, special

from app.dictionaries.service import DictionaryConfig
from app.domain.service import build_quadrature, composite_gauss_legendre, make_generator, sample
from app.errors import ConfigurationError, ContractViolation, QuadratureError
from app.spectral.utils import FAMILIES, FourierPair, tail_bound, xi_rule
from app.varnorm.combination import SparseCombination
from app.varnorm.service import variation_upper

logger = logging.getLogger(__name__)

TAIL_FRACTION = 1e-6
MAX_TRUNCATION = 1024.0
INVERSION_TOLERANCE = 1e-4


# ============================================================================
# SPECTRAL BARRON NORM
# ============================================================================

@dataclass(frozen=True)
class SpectralNorm:
    """Head integral over |xi| <= r_max; `tail` is the declared uncertainty beyond it"""

    value: float
    tail: float
    r_max: float
    s: float

    def __float__(self) -> float:
        return self.value


def _head(pair: FourierPair, s: float, r_max: float, panels: int) -> float:
    nodes, weights = xi_rule(pair.dim, r_max, panels)
    radius = np.linalg.norm(nodes, axis=1)
    return float(weights @ ((1.0 + radius) ** s * np.abs(pair.transform(nodes))))


def spectral_barron_norm(
    pair: FourierPair,
    s: float,
    r_max: Optional[float] = None,
    panels: int = 128,
) -> SpectralNorm:
    """int (1+|xi|)^s |f^(xi)| dxi; r_max doubles from the pair's decay radius when not given"""
    if s < 0:
        raise ContractViolation(f"decay order must be >= 0, got {s}")
    if pair.envelope is None:
        raise ConfigurationError(f"{pair.name} declares no decay envelope", loc="pair.envelope")

    radius = float(r_max) if r_max is not None else float(pair.decay_radius)
    while True:
        head = _head(pair, s, radius, panels)
        tail = tail_bound(pair, s, radius)
        if tail <= TAIL_FRACTION * head:
            break
        if r_max is not None or radius >= MAX_TRUNCATION:
            raise ConfigurationError(
                f"{pair.name}: envelope tail {tail:.3e} beyond |xi|={radius:g} exceeds {TAIL_FRACTION:g} of the head {head:.3e}",
                loc="pair.r_max",
            )
        radius *= 2.0

    logger.debug(f"spectral norm of {pair.name}, s={s}: {head:.10g} (+{tail:.1e} tail) at r_max={radius:g}")
    return SpectralNorm(value=head, tail=tail, r_max=radius, s=s)


def inversion_error(pair: FourierPair, r_max: float, seed: int = 0, count: int = 5, panels: int = 128) -> float:
    """max |f(x) - int_{|xi| <= r_max} f^ exp(2 pi i xi.x) dxi| over random x in [-1, 1]^d"""
    points = make_generator(seed).uniform(-1.0, 1.0, size=(count, pair.dim))
    nodes, weights = xi_rule(pair.dim, r_max, panels)
    weighted = weights * pair.transform(nodes)
    inverse = np.exp(2j * math.pi * (points @ nodes.T)) @ weighted
    return float(np.max(np.abs(pair.spatial(points) - inverse)))


def gaussian_factor_integral(R: float, s: float) -> float:
    """int (1+|xi|)^s |g_R^(xi)| dxi for g_R(x) = exp(-x^2/(2R)), g_R^ = sqrt(2 pi R) exp(-2 pi^2 R xi^2)"""
    if R <= 0:
        raise ContractViolation(f"R must be positive, got {R}")
    if s < 0:
        raise ContractViolation(f"decay order must be >= 0, got {s}")
    # xi = t / (pi sqrt(2R)) turns the integral into a fixed Gaussian moment
    scale = 1.0 / (math.pi * math.sqrt(2.0 * R))
    value, _ = integrate.quad(
        lambda t: (1.0 + scale * t) ** s * math.exp(-t * t), 0.0, np.inf, epsabs=1e-14, epsrel=1e-13
    )
    return float(2.0 / math.sqrt(math.pi) * value)


# ============================================================================
# GAUSSIAN CUTOFF
# ============================================================================

@dataclass(frozen=True)
class CutoffReport:
    R: float
    s: float
    L: float
    k: int
    gaussian_integral: float
    correction_integral: float
    total: float
    on_domain_max_error: float
    refinement_gap: float

    def as_row(self) -> Dict[str, Any]:
        return {
            "R": self.R,
            "s": self.s,
            "L": self.L,
            "k": self.k,
            "gaussian_integral": self.gaussian_integral,
            "correction_integral": self.correction_integral,
            "total": self.total,
            "on_domain_max_error": self.on_domain_max_error,
            "refinement_gap": self.refinement_gap,
        }


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, every derivative vanishing at both ends"""
    t = np.asarray(t, dtype=float)
    inside = np.clip(t, 1e-300, 1.0 - 1e-16)
    with np.errstate(over="ignore", divide="ignore"):
        left = np.where(t > 0, np.exp(-1.0 / inside), 0.0)
        right = np.where(t < 1, np.exp(-1.0 / (1.0 - inside)), 0.0)
    total = left + right
    return np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, left / np.where(total > 0, total, 1.0)))


def cutoff_correction(R: float, L: float, k: int):
    """tau_R: 1 - g_R on [-L, L]; beyond, its order-k Taylor polynomial at +-L faded out over one unit"""
    a = math.sqrt(2.0 * R)
    g_at_L = math.exp(-L * L / (2.0 * R))
    # d^j/dx^j exp(-(x/a)^2) = (-1/a)^j H_j(x/a) exp(-(x/a)^2)
    taylor = [1.0 - g_at_L] + [
        -((-1.0 / a) ** j) * special.eval_hermite(j, L / a) * g_at_L / math.factorial(j) for j in range(1, k + 1)
    ]
    polynomial = np.polynomial.Polynomial(taylor)

    def tau(x):
        ax = np.abs(np.asarray(x, dtype=float))
        inside = 1.0 - np.exp(-ax * ax / (2.0 * R))
        t = ax - L
        outside = polynomial(t) * (1.0 - _smooth_step(t))
        return np.where(ax <= L, inside, outside)

    return tau


def _cosine_transform(fn, support: float, L: float, xi: np.ndarray, panels: int, chunk: int = 2048) -> np.ndarray:
    """2 int_0^support fn(x) cos(2 pi xi x) dx for an even fn, with a panel edge at L"""
    x_in, w_in = composite_gauss_legendre(0.0, L, panels, 8)
    x_out, w_out = composite_gauss_legendre(L, support, panels, 8)
    x = np.concatenate([x_in, x_out])
    w = np.concatenate([w_in, w_out]) * fn(x)
    out = np.empty(xi.shape[0])
    for start in range(0, xi.shape[0], chunk):
        block = xi[start : start + chunk]
        out[start : start + chunk] = 2.0 * (np.cos(2.0 * math.pi * np.outer(block, x)) @ w)
    return out


def _cutoff_integrals(R: float, s: float, L: float, k: int, x_panels: int, xi_panels: int, xi_max: float):
    near, w_near = composite_gauss_legendre(0.0, 1.0, xi_panels // 8, 8)
    far, w_far = composite_gauss_legendre(1.0, xi_max, xi_panels, 8)
    xi = np.concatenate([near, far])
    weight = 2.0 * np.concatenate([w_near, w_far]) * (1.0 + xi) ** s

    g_hat = math.sqrt(2.0 * math.pi * R) * np.exp(-2.0 * math.pi ** 2 * R * xi * xi)
    tau_hat = _cosine_transform(cutoff_correction(R, L, k), L + 1.0, L, xi, x_panels)
    return (
        float(weight @ np.abs(g_hat)),
        float(weight @ np.abs(tau_hat)),
        float(weight @ np.abs(g_hat + tau_hat)),
    )


def build_cutoff(
    R: float,
    s: float,
    L: float = 1.0,
    k: Optional[int] = None,
    x_panels: int = 128,
    xi_panels: int = 2048,
    xi_max: float = 40.0,
    rtol: float = 1e-2,
) -> CutoffReport:
    """phi_R = g_R + tau_R equals 1 on [-L, L]; reports the weighted L1 norms of both transforms"""
    if R <= 0 or L <= 0:
        raise ContractViolation(f"R and L must be positive, got R={R}, L={L}")
    k = int(math.floor(s)) + 3 if k is None else int(k)
    if k <= s + 2:
        raise ContractViolation(f"smoothness k must exceed s + 2, got k={k}, s={s}")

    fine = _cutoff_integrals(R, s, L, k, x_panels, xi_panels, xi_max)
    coarse = _cutoff_integrals(R, s, L, k, x_panels // 2, xi_panels // 2, xi_max)
    gap = abs(fine[1] - coarse[1])
    if gap > rtol * max(fine[1], 1e-12) + 1e-12:
        raise QuadratureError(
            f"correction integral for R={R} not converged: {fine[1]:.6g} vs {coarse[1]:.6g} at half resolution",
            details={"R": R, "fine": fine[1], "coarse": coarse[1]},
        )

    x = np.linspace(-L, L, 2001)
    phi = np.exp(-x * x / (2.0 * R)) + cutoff_correction(R, L, k)(x)
    report = CutoffReport(
        R=float(R),
        s=float(s),
        L=float(L),
        k=k,
        gaussian_integral=fine[0],
        correction_integral=fine[1],
        total=fine[2],
        on_domain_max_error=float(np.max(np.abs(phi - 1.0))),
        refinement_gap=gap,
    )
    logger.info(f"cutoff R={R:g}: total {report.total:.6g} = gaussian {report.gaussian_integral:.6g} + correction {report.correction_integral:.3e}")
    return report


def product_cutoff_bound(report: CutoffReport, dim: int) -> float:
    """Bound for the separable cutoff prod_i phi_R(x_i) in d dimensions"""
    if dim < 1:
        raise ContractViolation(f"dimension must be >= 1, got {dim}")
    return report.total ** dim


def extension_norm_bound(combination: SparseCombination, report: CutoffReport, dim: int = 1) -> float:
    """Weighted spectral norm bound for phi_R * f with f a finite F_s combination"""
    if any(getattr(atom, "family", None) != "F_s" for atom in combination.atoms):
        raise ContractViolation("extension bound needs an F_s combination")
    if combination.size and any(atom.s > report.s + 1e-12 for atom in combination.atoms):
        raise ContractViolation("cutoff was built for a smaller decay order than the combination uses")
    return product_cutoff_bound(report, dim) * combination.mass


def weight_submultiplicative(xi: np.ndarray, nu: np.ndarray, s: float) -> np.ndarray:
    """(1+|xi|)^s <= (1+|nu|)^s (1+|xi-nu|)^s, row by row"""
    xi = np.atleast_2d(xi)
    nu = np.atleast_2d(nu)
    left = (1.0 + np.linalg.norm(xi, axis=1)) ** s
    right = (1.0 + np.linalg.norm(nu, axis=1)) ** s * (1.0 + np.linalg.norm(xi - nu, axis=1)) ** s
    return left <= right * (1.0 + 1e-12)


# ============================================================================
# F_s EQUALITY CHECK
# ============================================================================

def fs_equality_experiment(
    pair: FourierPair,
    s: float,
    config: DictionaryConfig,
    level: int = 64,
    slack: float = 0.1,
    eps: Optional[float] = None,
    budget: Optional[int] = None,
) -> Dict[str, Any]:
    """F_s upper bound of f restricted to the box against the spectral norm of the given extension"""
    if config.family != "F_s":
        raise ConfigurationError("equality check needs an F_s dictionary", loc="dictionary.family")
    if abs(config.s - s) > 1e-12:
        raise ConfigurationError(f"dictionary decay order {config.s} differs from s={s}", loc="dictionary.s")
    if config.dim != pair.dim:
        raise ConfigurationError(f"pair has d={pair.dim}, dictionary has d={config.dim}", loc="dictionary.domain")

    spectral = spectral_barron_norm(pair, s)
    quadrature = build_quadrature(config.domain, level)
    f = sample(pair.spatial, quadrature)
    report, _ = variation_upper(f, config, eps=eps, budget=budget)

    gap = report.upper - spectral.value
    within = report.success and report.upper <= spectral.value * (1.0 + slack)
    status = "ok" if within else ("solver_failure" if not report.success else "above_spectral")
    logger.info(f"{'✅' if within else '❌'} F_s check {pair.name}, s={s}: upper {report.upper:.6g} vs spectral {spectral.value:.6g}")
    return {
        "pair": pair.name,
        "s": s,
        "variation_upper": report.upper,
        "spectral_value": spectral.value,
        "spectral_tail": spectral.tail,
        "gap": gap,
        "relative_gap": gap / spectral.value if spectral.value > 0 else float("nan"),
        "within": bool(within),
        "status": status,
    }


def fs_equality_table(pair: FourierPair, s_values, config: DictionaryConfig, **kwargs) -> pd.DataFrame:
    rows = [
        fs_equality_experiment(pair, s, config.model_copy(update={"s": float(s)}), **kwargs) for s in s_values
    ]
    return pd.DataFrame(rows)


# ============================================================================
# MANIFEST RECORDS
# ============================================================================

class FourierPairSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["gaussian", "cauchy", "hat"]
    params: Dict[str, float] = Field(default_factory=dict)
    dim: int = Field(1, ge=1, le=2)


def pair_from_manifest(record: Dict[str, Any], check: bool = True) -> FourierPair:
    """Build a built-in pair from {family, params, dim}; optionally spot-check Fourier inversion"""
    try:
        spec = FourierPairSpec.model_validate(record)
    except ValidationError as exc:
        errors = [{"loc": "pair." + ".".join(str(p) for p in e["loc"]), "msg": e["msg"]} for e in exc.errors()]
        raise ConfigurationError("invalid Fourier pair record", errors=errors) from exc

    builder = FAMILIES[spec.family]
    params = dict(spec.params)
    if spec.family != "hat":
        params["dim"] = spec.dim
    elif spec.dim != 1:
        raise ConfigurationError("hat pair is one-dimensional", loc="pair.dim")
    try:
        pair = builder(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {spec.family}: {exc}", loc="pair.params") from exc

    if check:
        truncation = spectral_barron_norm(pair, 0.0).r_max
        error = inversion_error(pair, truncation)
        if error > INVERSION_TOLERANCE:
            raise ContractViolation(f"{pair.name}: Fourier inversion misses by {error:.2e} at r_max={truncation:g}")
    return pair
