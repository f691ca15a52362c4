import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional, Tuple

import numpy as np

from app.dictionaries.atoms import BarronAtom, RidgeAtom, SpectralAtom
from app.dictionaries.service import DictionaryConfig
from app.domain.service import GridFunction, Quadrature, sample
from app.errors import ConfigurationError
from app.greedy.service import benchmark_combination
from app.records.atoms import load_combination
from app.varnorm.combination import SparseCombination
from app.varnorm.service import synth
from config import settings

LOGGER_NAME = "app"


# ============================================================================
# LOGGING SETUP
# ============================================================================

def setup_logging(log_dir: Optional[str] = None, level: Optional[str] = None, quiet: bool = False) -> logging.Logger:
    """Rotating run log plus console output for every app.* logger"""
    log_dir = log_dir or os.path.join(settings.OUTPUT_DIR, settings.LOG_DIR_NAME)
    os.makedirs(log_dir, exist_ok=True)
    level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Rotating file handler (max 10MB, keep 5 backups)
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, settings.LOG_FILE),
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding="utf-8",
    )
    file_handler.setLevel(level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING if quiet else level)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    file_handler.setFormatter(formatter)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger.propagate = False
    return logger


# ============================================================================
# BUILT-IN TARGETS
# ============================================================================

def _unit(vector, dim: int) -> np.ndarray:
    if vector is None:
        return np.eye(dim)[0]
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (dim,) or np.linalg.norm(vector) == 0.0:
        raise ConfigurationError(f"direction must be a nonzero vector of length {dim}", loc="target.omega")
    return vector / np.linalg.norm(vector)


def atom_target(config: DictionaryConfig, omega=None, b: float = 0.0, xi=None):
    """A single dictionary atom of the configured family"""
    if config.family == "P_k":
        return RidgeAtom(config.k, _unit(omega, config.dim), b)
    if config.family == "F_s":
        xi = np.zeros(config.dim) if xi is None else np.asarray(xi, dtype=float)
        if xi.shape != (config.dim,):
            raise ConfigurationError(f"xi must have length {config.dim}", loc="target.xi")
        return SpectralAtom(config.s, xi)
    return BarronAtom(_unit(omega, config.dim), b)


_FAMILY_TYPES = {"P_k": RidgeAtom, "F_s": SpectralAtom, "B": BarronAtom}


def _check_members(atoms, config: DictionaryConfig, loc: str) -> None:
    """Known masses only count when every atom belongs to the configured dictionary"""
    expected = _FAMILY_TYPES[config.family]
    for atom in atoms:
        if type(atom) is not expected:
            raise ConfigurationError(
                f"{type(atom).__name__} is not an atom of family {config.family}", loc=loc
            )
        if atom.dim != config.dim:
            raise ConfigurationError(f"atom dimension {atom.dim} differs from the domain ({config.dim})", loc=loc)
        if config.family == "P_k":
            if atom.k != config.k:
                raise ConfigurationError(f"atom power {atom.k} differs from dictionary k={config.k}", loc=loc)
            if not config.c1 <= atom.b <= config.c2:
                raise ConfigurationError(
                    f"offset {atom.b} outside [c1, c2] = [{config.c1}, {config.c2}]", loc=loc
                )
        if config.family == "F_s" and atom.s != config.s:
            raise ConfigurationError(f"atom order {atom.s} differs from dictionary s={config.s}", loc=loc)


def build_target(
    name: str,
    config: DictionaryConfig,
    quadrature: Quadrature,
    path: Optional[str] = None,
    atoms: int = 10,
    sigma: float = 1.0,
    seed: int = 0,
    omega=None,
    b: float = 0.0,
    xi=None,
) -> Tuple[GridFunction, Optional[float]]:
    """Sampled target and, when known, the l1 mass of a representation of it"""
    if name == "atom":
        atom = atom_target(config, omega, b, xi)
        _check_members([atom], config, "target.b")
        return synth(SparseCombination.single(atom), quadrature), 1.0
    if name == "identity":
        return sample(lambda x: x[:, 0], quadrature), None
    if name == "gaussian":
        return sample(lambda x: np.exp(-np.sum(x * x, axis=1) / (2.0 * sigma ** 2)), quadrature), None
    if name == "benchmark":
        combination = benchmark_combination(config, atoms, seed)
        return synth(combination, quadrature), combination.mass
    if name == "combination":
        if not path:
            raise ConfigurationError("combination target needs a file path", loc="target.path")
        combination = load_combination(path)
        _check_members(combination.atoms, config, "target.path")
        return synth(combination, quadrature), combination.mass
    raise ConfigurationError(f"unknown target '{name}'", loc="target.name")
