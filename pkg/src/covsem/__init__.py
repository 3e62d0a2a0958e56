"""Covert semantic communication lab: simulator, GNT metric and PS-TD3 learners."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
