import itertools
import math

import numpy as np
from scipy.stats import norm, qmc

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def fibonacci_sphere(count: int) -> np.ndarray:
    """`count` nearly uniform points on S^2"""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = GOLDEN_ANGLE * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sobol_sphere(dim: int, count: int) -> np.ndarray:
    """Sobol points pushed through the normal quantile and normalized onto S^(dim-1)"""
    m = max(1, math.ceil(math.log2(count + 1)))
    unit = qmc.Sobol(d=dim, scramble=False).random_base2(m=m)[1 : count + 1]
    gaussian = norm.ppf(np.clip(unit, 1e-12, 1.0 - 1e-12))
    lengths = np.linalg.norm(gaussian, axis=1, keepdims=True)
    # Sobol rows on the diagonal can map to the origin
    gaussian[lengths[:, 0] == 0.0] = np.eye(dim)[0]
    return gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic antipodally closed directions on S^(dim-1)"""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        n = count + count % 2
        theta = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    base = fibonacci_sphere(count) if dim == 3 else sobol_sphere(dim, count)
    return np.vstack([base, -base])


def direction_spacing(dim: int, count: int) -> float:
    """Typical distance between neighbouring grid directions"""
    if dim == 1:
        return 0.0
    if dim == 2:
        return 2.0 * np.pi / (count + count % 2)
    # area of S^(dim-1) shared among 2*count points, taken to the 1/(dim-1)
    area = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    return float((area / (2 * count)) ** (1.0 / (dim - 1)))


def frequency_lattice(dim: int, step: float, radius: float) -> np.ndarray:
    """step * Z^dim restricted to the closed ball of the given radius, lexicographic order"""
    m = int(math.floor(radius / step + 1e-9))
    axis = step * np.arange(-m, m + 1)
    points = np.array(list(itertools.product(axis, repeat=dim)), dtype=float).reshape(-1, dim)
    keep = np.linalg.norm(points, axis=1) <= radius + 1e-12
    return points[keep]
