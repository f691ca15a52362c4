"""
Box domains, quadrature rules and L2(Omega) inner products.

Every function in the library lives on a shared Quadrature: tensor Gauss-Legendre
for d <= 3, composite Gauss-Legendre panels for kinked integrands, and unscrambled
Sobol points for any dimension.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import special
from scipy.stats import qmc

from app.errors import ConfigurationError, ContractViolation, SamplingError
from config import settings

logger = logging.getLogger(__name__)

QuadratureKind = Literal["tensor", "composite", "qmc"]
Scalar = Union[float, complex]


# ============================================================================
# DOMAIN TYPES
# ============================================================================

class BoxDomain(BaseModel):
    """Axis-aligned box lo <= x <= hi"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_bounds(self):
        if len(self.lo) == 0 or len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must be nonempty and of equal length")
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("lo[i] < hi[i] required on every axis")
        return self

    @classmethod
    def cube(cls, dim: int, lo: float = -1.0, hi: float = 1.0) -> "BoxDomain":
        return cls(lo=(lo,) * dim, hi=(hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def radius(self) -> float:
        """max |x|_2 over the box; inf/sup of x.w over box and sphere are -radius/+radius"""
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.linalg.norm(corner))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def projection_range(self, omega) -> Tuple[float, float]:
        """(inf, sup) of x.omega over the box"""
        omega = np.asarray(omega, dtype=float)
        lo_terms = np.asarray(self.lo) * omega
        hi_terms = np.asarray(self.hi) * omega
        return float(np.minimum(lo_terms, hi_terms).sum()), float(np.maximum(lo_terms, hi_terms).sum())

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= np.asarray(self.lo)) & (points <= np.asarray(self.hi)), axis=1)


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Nodes (n, d) and positive weights realizing integrals over a BoxDomain"""

    domain: BoxDomain
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    level: int
    order: int = 0

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def key(self) -> tuple:
        return (self.kind, self.level, self.order, self.domain.lo, self.domain.hi)

    def same_as(self, other: "Quadrature") -> bool:
        return self is other or self.key == other.key


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Function values on the nodes of one quadrature"""

    quadrature: Quadrature
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.quadrature.size,):
            raise ContractViolation(
                f"GridFunction needs {self.quadrature.size} values, got shape {values.shape}"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def _check(self, other: "GridFunction") -> None:
        if not self.quadrature.same_as(other.quadrature):
            raise ContractViolation("grid functions live on different quadratures")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.quadrature, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.quadrature, self.values - other.values)

    def __mul__(self, scalar: Scalar) -> "GridFunction":
        return GridFunction(self.quadrature, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.quadrature, -self.values)

    def conj(self) -> "GridFunction":
        return GridFunction(self.quadrature, np.conj(self.values))


# ============================================================================
# QUADRATURE RULES
# ============================================================================

def gauss_legendre(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [a, b]"""
    x, w = special.roots_legendre(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_gauss_legendre(a: float, b: float, panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre of `order` points on each of `panels` equal panels of [a, b]"""
    edges = np.linspace(a, b, panels + 1)
    x, w = special.roots_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _tensor_product(rules) -> Tuple[np.ndarray, np.ndarray]:
    node_axes = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    weight_axes = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([axis.ravel() for axis in node_axes], axis=1)
    weights = np.prod(np.stack([axis.ravel() for axis in weight_axes], axis=0), axis=0)
    return nodes, weights


def _node_count(dim: int, level: int, kind: str, order: int) -> int:
    if kind == "tensor":
        return level ** dim
    if kind == "composite":
        return (level * order) ** dim
    return 2 ** level


def build_quadrature(
    domain: BoxDomain,
    level: int,
    kind: QuadratureKind = "tensor",
    order: Optional[int] = None,
) -> Quadrature:
    """Build a quadrature rule on the box"""
    if level <= 0:
        raise ConfigurationError(f"quadrature level must be positive, got {level}", loc="quadrature.level")
    if kind not in ("tensor", "composite", "qmc"):
        raise ConfigurationError(f"unknown quadrature kind '{kind}'", loc="quadrature.kind")

    order = order or (settings.COMPOSITE_ORDER if kind == "composite" else 0)
    if kind in ("tensor", "composite") and domain.dim > 3:
        raise ConfigurationError(
            f"{kind} quadrature supports d <= 3, got d={domain.dim}; use kind='qmc'",
            loc="quadrature.kind",
        )
    if kind == "tensor" and level > settings.MAX_TENSOR_LEVEL:
        raise ConfigurationError(
            f"tensor level {level} exceeds {settings.MAX_TENSOR_LEVEL}", loc="quadrature.level"
        )
    if kind == "qmc" and level > settings.MAX_QMC_LEVEL:
        raise ConfigurationError(f"qmc level {level} exceeds {settings.MAX_QMC_LEVEL}", loc="quadrature.level")

    count = _node_count(domain.dim, level, kind, order)
    if count > settings.MAX_QUADRATURE_NODES:
        raise ConfigurationError(
            f"quadrature would need {count} nodes, budget is {settings.MAX_QUADRATURE_NODES}",
            loc="quadrature.level",
        )

    lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
    if kind == "tensor":
        nodes, weights = _tensor_product([gauss_legendre(a, b, level) for a, b in zip(lo, hi)])
    elif kind == "composite":
        nodes, weights = _tensor_product(
            [composite_gauss_legendre(a, b, level, order) for a, b in zip(lo, hi)]
        )
    else:
        unit = qmc.Sobol(d=domain.dim, scramble=False).random_base2(m=level)
        nodes = lo + (hi - lo) * unit
        weights = np.full(nodes.shape[0], domain.volume / nodes.shape[0])

    nodes.setflags(write=False)
    weights.setflags(write=False)
    logger.debug(f"Quadrature {kind} level={level} on d={domain.dim}: {weights.shape[0]} nodes")
    return Quadrature(domain=domain, nodes=nodes, weights=weights, kind=kind, level=level, order=order)


# ============================================================================
# INNER PRODUCTS
# ============================================================================

def inner(f: GridFunction, g: GridFunction) -> Scalar:
    """sum_j w_j f(x_j) conj(g(x_j))"""
    if not f.quadrature.same_as(g.quadrature):
        raise ContractViolation("inner product of grid functions on different quadratures")
    value = np.sum(f.quadrature.weights * f.values * np.conj(g.values))
    if np.iscomplexobj(value):
        return complex(value)
    return float(value)


def norm_l2(f: GridFunction) -> float:
    value = inner(f, f)
    return float(np.sqrt(max(np.real(value), 0.0)))


def sample(fn: Callable[[np.ndarray], np.ndarray], quadrature: Quadrature) -> GridFunction:
    """Evaluate a vectorized callable (points of shape (n, d)) on the nodes"""
    raw = np.asarray(fn(quadrature.nodes))
    try:
        values = np.broadcast_to(raw, (quadrature.size,)).copy()
    except ValueError as exc:
        raise ContractViolation(
            f"callable returned shape {raw.shape}, expected ({quadrature.size},)"
        ) from exc

    finite = np.isfinite(values)
    if not np.all(finite):
        index = int(np.flatnonzero(~finite)[0])
        node = quadrature.nodes[index].tolist()
        raise SamplingError(f"non-finite value {values[index]} at node {node}", node=node, value=str(values[index]))

    return GridFunction(quadrature, values)


def zeros(quadrature: Quadrature, dtype=float) -> GridFunction:
    return GridFunction(quadrature, np.zeros(quadrature.size, dtype=dtype))


# ============================================================================
# RANDOM STREAMS
# ============================================================================

def make_generator(seed: int) -> np.random.Generator:
    """Counter-based generator: the same seed yields the same draws on every platform"""
    return np.random.Generator(np.random.Philox(int(seed)))
