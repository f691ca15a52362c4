"""
Application Configuration
=========================
Central configuration for solver defaults, quadrature budgets and run output.
Every value can be overridden with a VARSPACE_* environment variable or the .env file.
"""

import os

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file in root directory
# Get the base directory (parent of varspace folder)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
load_dotenv(os.path.join(BASE_DIR, ".env"))


class Settings(BaseSettings):
    """Library and runner settings"""

    model_config = SettingsConfigDict(env_prefix="VARSPACE_", extra="ignore")

    # ---------- Quadrature ----------
    MAX_TENSOR_LEVEL: int = 64
    MAX_QMC_LEVEL: int = 22
    MAX_QUADRATURE_NODES: int = 4_000_000
    COMPOSITE_ORDER: int = 4

    # ---------- Dictionaries ----------
    NORM_SAFETY_FACTOR: float = 1.05

    # ---------- Variation-norm solver ----------
    DEFAULT_EPS_FRACTION: float = 1e-3
    DEFAULT_BUDGET: int = 200
    LAMBDA_START_FRACTION: float = 0.1
    LAMBDA_DECAY: float = 0.5
    LAMBDA_FLOOR: float = 1e-10
    LAMBDA_BISECTION_STEPS: int = 10
    KKT_TOLERANCE: float = 0.02
    PRICING_BATCH: int = 10
    REFINE_STEPS: int = 20
    CD_MAX_SWEEPS: int = 2000
    CD_TOLERANCE: float = 1e-9

    # ---------- Greedy ----------
    GRAM_REGULARIZATION: float = 1e-12

    # ---------- Runner ----------
    OUTPUT_DIR: str = os.path.join(BASE_DIR, "runs")
    LOG_DIR_NAME: str = "logs"
    LOG_FILE: str = "varspace.log"
    LOG_LEVEL: str = "INFO"

    @classmethod
    def validate(cls, instance: "Settings" = None):
        """Validate that numeric settings are in range"""
        current = instance or settings
        checks = {
            "MAX_TENSOR_LEVEL": current.MAX_TENSOR_LEVEL >= 1,
            "MAX_QMC_LEVEL": current.MAX_QMC_LEVEL >= 1,
            "MAX_QUADRATURE_NODES": current.MAX_QUADRATURE_NODES >= 1,
            "COMPOSITE_ORDER": current.COMPOSITE_ORDER >= 1,
            "NORM_SAFETY_FACTOR": current.NORM_SAFETY_FACTOR >= 1.0,
            "DEFAULT_EPS_FRACTION": current.DEFAULT_EPS_FRACTION > 0,
            "DEFAULT_BUDGET": current.DEFAULT_BUDGET >= 1,
            "LAMBDA_START_FRACTION": current.LAMBDA_START_FRACTION > 0,
            "LAMBDA_DECAY": 0 < current.LAMBDA_DECAY < 1,
            "LAMBDA_FLOOR": current.LAMBDA_FLOOR > 0,
            "LAMBDA_BISECTION_STEPS": current.LAMBDA_BISECTION_STEPS >= 0,
            "KKT_TOLERANCE": current.KKT_TOLERANCE >= 0,
            "PRICING_BATCH": current.PRICING_BATCH >= 1,
            "REFINE_STEPS": current.REFINE_STEPS >= 0,
            "CD_MAX_SWEEPS": current.CD_MAX_SWEEPS >= 1,
            "CD_TOLERANCE": current.CD_TOLERANCE > 0,
            "GRAM_REGULARIZATION": current.GRAM_REGULARIZATION >= 0,
        }

        invalid = [key for key, ok in checks.items() if not ok]

        if invalid:
            raise ValueError(
                f"Invalid settings: {', '.join(invalid)}\n"
                f"Please check the VARSPACE_* variables in your .env file"
            )

        return True


# Create a singleton instance
settings = Settings()
