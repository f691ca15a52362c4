"""Variation spaces of shallow-network dictionaries."""

__version__ = "1.0.0"
