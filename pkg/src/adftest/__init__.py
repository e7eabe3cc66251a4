"""Scenario generation, simulation and evaluation for testing automated driving functions."""
from ._jit import USING_NUMBA

__version__ = "0.1.0"

__all__ = ["USING_NUMBA", "__version__"]
