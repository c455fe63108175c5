"""Occlusion-aware motion prediction and scenario simulation."""

__version__ = "0.1.0"

from occlusim.config import DEFAULT_CONFIG, SimConfig

__all__ = ["DEFAULT_CONFIG", "SimConfig", "__version__"]
