"""
Profile functions on [-1, 1]: piecewise polynomials with exact derivative and
jump data, and smooth callables carrying their derivative callables.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from app.errors import ContractViolation, QuadratureError

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

SPOT_POINTS = (-0.7, -0.2, 0.3, 0.8)
FD_STEP = 1e-5
FD_TOLERANCE = 1e-4


# ============================================================================
# PIECEWISE POLYNOMIALS
# ============================================================================

@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """Right-continuous piecewise polynomial; pieces[i] lives on [breakpoints[i-1], breakpoints[i])"""

    breakpoints: Tuple[float, ...]
    pieces: Tuple[Polynomial, ...]
    name: str = "piecewise"
    max_degree: int = 8

    def __post_init__(self):
        breakpoints = tuple(float(t) for t in self.breakpoints)
        pieces = tuple(Polynomial(p).trim() if not isinstance(p, Polynomial) else p.trim() for p in self.pieces)
        if len(pieces) != len(breakpoints) + 1:
            raise ContractViolation(f"{len(breakpoints)} breakpoints need {len(breakpoints) + 1} pieces, got {len(pieces)}")
        if any(not -1.0 < t < 1.0 for t in breakpoints):
            raise ContractViolation(f"breakpoints must lie inside (-1, 1), got {breakpoints}")
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise ContractViolation(f"breakpoints must be strictly increasing, got {breakpoints}")
        too_high = [p.degree() for p in pieces if p.degree() > self.max_degree]
        if too_high:
            raise ContractViolation(f"piece degree {max(too_high)} exceeds {self.max_degree}")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "pieces", pieces)

    # ----- constructors -----

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], name: str = "polynomial") -> "PiecewisePolynomial":
        """Coefficients in increasing degree"""
        return cls((), (Polynomial(coefficients),), name=name)

    @classmethod
    def relu_power(cls, k: int, shift: float = 0.0, name: Optional[str] = None) -> "PiecewisePolynomial":
        """sigma_k(x - shift), with sigma_0 the right-continuous Heaviside step"""
        right = Polynomial([-shift, 1.0]) ** k if k > 0 else Polynomial([1.0])
        return cls((shift,), (Polynomial([0.0]), right), name=name or f"sigma_{k}")

    @classmethod
    def linear_spline(cls, knots: Sequence[float], values: Sequence[float], name: str = "linear_spline") -> "PiecewisePolynomial":
        """Continuous piecewise-linear interpolant; knots include both endpoints -1 and 1"""
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.shape != values.shape or knots.shape[0] < 2:
            raise ContractViolation("linear spline needs matching knots and values, at least two of each")
        if knots[0] != -1.0 or knots[-1] != 1.0:
            raise ContractViolation("linear spline knots must start at -1 and end at 1")
        pieces = []
        for (a, b), (fa, fb) in zip(zip(knots, knots[1:]), zip(values, values[1:])):
            slope = (fb - fa) / (b - a)
            pieces.append(Polynomial([fa - slope * a, slope]))
        return cls(tuple(knots[1:-1]), tuple(pieces), name=name)

    # ----- evaluation -----

    @property
    def degree(self) -> int:
        return max(p.degree() for p in self.pieces)

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), x, side="right")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        index = self._piece_index(x)
        out = np.zeros_like(x)
        for i, piece in enumerate(self.pieces):
            mask = index == i
            if np.any(mask):
                out[mask] = piece(x[mask])
        return out

    def derivative(self, order: int = 1) -> "PiecewisePolynomial":
        if order == 0:
            return self
        return PiecewisePolynomial(
            self.breakpoints,
            tuple(p.deriv(order) for p in self.pieces),
            name=f"{self.name}^({order})",
            max_degree=self.max_degree,
        )

    def value_at(self, x, order: int = 0) -> np.ndarray:
        return self.derivative(order)(x)

    def jumps(self, order: int = 0) -> np.ndarray:
        """f^(order)(t+) - f^(order)(t-) at each breakpoint"""
        pieces = self.derivative(order).pieces
        return np.array([pieces[i + 1](t) - pieces[i](t) for i, t in enumerate(self.breakpoints)])

    def total_variation(self) -> float:
        """Exact TV on [-1, 1]: monotone piece increments between critical points plus jump sizes"""
        edges = (-1.0,) + self.breakpoints + (1.0,)
        total = 0.0
        for piece, a, b in zip(self.pieces, edges, edges[1:]):
            roots = piece.deriv().roots() if piece.degree() > 1 else np.array([])
            critical = sorted(float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and a < r.real < b)
            points = np.array([a] + critical + [b])
            total += float(np.abs(np.diff(piece(points))).sum())
        return total + float(np.abs(self.jumps(0)).sum())


# ============================================================================
# SMOOTH PROFILES
# ============================================================================

@dataclass(frozen=True, eq=False)
class SmoothProfile:
    """Smooth callable with derivatives[j-1] = f^(j); derivative data is finite-difference spot-checked"""

    fn: ArrayFn
    derivatives: Tuple[ArrayFn, ...] = field(default_factory=tuple)
    name: str = "smooth"
    check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "derivatives", tuple(self.derivatives))
        if self.check:
            self._spot_check()

    def _spot_check(self) -> None:
        chain = (self.fn,) + self.derivatives
        x = np.asarray(SPOT_POINTS)
        for j in range(1, len(chain)):
            difference = (chain[j - 1](x + FD_STEP) - chain[j - 1](x - FD_STEP)) / (2.0 * FD_STEP)
            exact = chain[j](x)
            gap = np.abs(difference - exact) / np.maximum(1.0, np.abs(exact))
            if np.any(gap > FD_TOLERANCE):
                worst = int(np.argmax(gap))
                raise ContractViolation(
                    f"{self.name}: derivative {j} disagrees with finite differences at x={x[worst]} "
                    f"(relative gap {gap[worst]:.2e})"
                )

    @property
    def order(self) -> int:
        return len(self.derivatives)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, order: int = 1) -> "SmoothProfile":
        if order == 0:
            return self
        if order > self.order:
            raise ContractViolation(f"{self.name}: derivative of order {order} not supplied (have {self.order})")
        return SmoothProfile(
            self.derivatives[order - 1], self.derivatives[order:], name=f"{self.name}^({order})", check=False
        )

    def value_at(self, x, order: int = 0) -> np.ndarray:
        return self.derivative(order)(x)


ProfileFunction = Union[PiecewisePolynomial, SmoothProfile]


# ============================================================================
# ADAPTIVE TOTAL VARIATION
# ============================================================================

def adaptive_total_variation(
    fn: ArrayFn,
    start: int = 32,
    max_doublings: int = 20,
    rtol: float = 1e-6,
) -> float:
    """sum |g(t_{i+1}) - g(t_i)| on uniform grids of [-1, 1], doubled until two successive sums agree"""
    n = start
    previous = None
    for _ in range(max_doublings + 1):
        grid = np.linspace(-1.0, 1.0, n + 1)
        current = float(np.abs(np.diff(np.asarray(fn(grid), dtype=float))).sum())
        if previous is not None and abs(current - previous) <= rtol * max(abs(current), 1e-300):
            return current
        if previous is not None and current == previous == 0.0:
            return 0.0
        previous = current
        n *= 2
    raise QuadratureError(
        f"total variation did not settle after {max_doublings} doublings (last sum {previous:.6g})",
        details={"last_sum": previous, "points": n // 2 + 1},
    )
