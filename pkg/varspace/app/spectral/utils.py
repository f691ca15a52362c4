"""
Fourier pairs under f^(xi) = int f(x) exp(-2 pi i xi.x) dx, their radial decay
envelopes, and xi-space quadrature rules for d <= 2.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from app.domain.service import composite_gauss_legendre
from app.errors import ConfigurationError

ArrayFn = Callable[[np.ndarray], np.ndarray]

RADIAL_ORDER = 8
ANGULAR_PANELS = 32


@dataclass(frozen=True, eq=False)
class FourierPair:
    """f on R^d with its transform; envelope(rho) bounds |f^| on the sphere of radius rho"""

    name: str
    dim: int
    spatial: ArrayFn
    transform: ArrayFn
    envelope: Optional[Callable[[float], float]] = None
    decay_radius: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"spectral quadrature supports d <= 2, got d={self.dim}", loc="pair.dim")


# ============================================================================
# BUILT-IN FAMILIES
# ============================================================================

def gaussian_pair(sigma: float = 1.0, dim: int = 1) -> FourierPair:
    """exp(-|x|^2 / (2 sigma^2)) <-> (sigma sqrt(2 pi))^d exp(-2 pi^2 sigma^2 |xi|^2)"""
    if sigma <= 0:
        raise ConfigurationError(f"gaussian width must be positive, got {sigma}", loc="pair.params.sigma")
    amplitude = (sigma * math.sqrt(2.0 * math.pi)) ** dim
    decay = 2.0 * math.pi ** 2 * sigma ** 2
    return FourierPair(
        name=f"gaussian(sigma={sigma})",
        dim=dim,
        spatial=lambda x: np.exp(-np.sum(np.atleast_2d(x) ** 2, axis=1) / (2.0 * sigma ** 2)),
        transform=lambda xi: amplitude * np.exp(-decay * np.sum(np.atleast_2d(xi) ** 2, axis=1)),
        envelope=lambda rho: amplitude * np.exp(-decay * rho ** 2),
        decay_radius=1.0 / sigma,
    )


def cauchy_pair(a: float = 1.0, dim: int = 1) -> FourierPair:
    """prod (a/pi) / (a^2 + x_i^2) <-> exp(-2 pi a |xi|_1)"""
    if a <= 0:
        raise ConfigurationError(f"cauchy scale must be positive, got {a}", loc="pair.params.a")
    return FourierPair(
        name=f"cauchy(a={a})",
        dim=dim,
        spatial=lambda x: np.prod((a / math.pi) / (a ** 2 + np.atleast_2d(x) ** 2), axis=1),
        transform=lambda xi: np.exp(-2.0 * math.pi * a * np.sum(np.abs(np.atleast_2d(xi)), axis=1)),
        # |xi|_1 >= |xi|_2
        envelope=lambda rho: np.exp(-2.0 * math.pi * a * rho),
        decay_radius=1.0 / a,
    )


def hat_pair(width: float = 1.0) -> FourierPair:
    """max(0, 1 - |x|/h) <-> h sinc^2(h xi); its slow decay defeats the tail bound"""
    if width <= 0:
        raise ConfigurationError(f"hat width must be positive, got {width}", loc="pair.params.width")
    return FourierPair(
        name=f"hat(width={width})",
        dim=1,
        spatial=lambda x: np.maximum(0.0, 1.0 - np.abs(np.atleast_2d(x)[:, 0]) / width),
        transform=lambda xi: width * np.sinc(width * np.atleast_2d(xi)[:, 0]) ** 2,
        envelope=lambda rho: 1.0 / (math.pi ** 2 * width * rho ** 2),
        decay_radius=1.0 / width,
    )


FAMILIES = {
    "gaussian": gaussian_pair,
    "cauchy": cauchy_pair,
    "hat": hat_pair,
}


# ============================================================================
# XI-SPACE RULES
# ============================================================================

def xi_rule(dim: int, r_max: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the ball |xi| <= r_max: composite Gauss on each half-line (d=1) or in polar form (d=2)"""
    rho, w_rho = composite_gauss_legendre(0.0, r_max, panels, RADIAL_ORDER)
    if dim == 1:
        nodes = np.concatenate([-rho[::-1], rho])[:, None]
        weights = np.concatenate([w_rho[::-1], w_rho])
        return nodes, weights
    # panel edges fall on the axes where |xi|_1 has kinks
    theta, w_theta = composite_gauss_legendre(0.0, 2.0 * math.pi, ANGULAR_PANELS, RADIAL_ORDER)
    r, t = np.meshgrid(rho, theta, indexing="ij")
    wr, wt = np.meshgrid(w_rho * rho, w_theta, indexing="ij")
    nodes = np.stack([(r * np.cos(t)).ravel(), (r * np.sin(t)).ravel()], axis=1)
    return nodes, (wr * wt).ravel()


def sphere_area(dim: int) -> float:
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def tail_bound(pair: FourierPair, s: float, r_max: float) -> float:
    """int_{|xi| > r_max} (1+|xi|)^s envelope(|xi|) dxi in radial form"""
    area = sphere_area(pair.dim)
    value, _ = integrate.quad(
        lambda rho: (1.0 + rho) ** s * float(pair.envelope(rho)) * area * rho ** (pair.dim - 1),
        r_max,
        np.inf,
        limit=200,
    )
    return float(value)
