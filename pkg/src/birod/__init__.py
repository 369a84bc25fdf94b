"""Equilibria and stability of a deployable elastic ladder (a birod)."""

from .model import LadderParams, PhysicalFlange, SolutionProfile
from .stability import StabilityVerdict, Verdict, classify

__all__ = ["LadderParams", "PhysicalFlange", "SolutionProfile", "StabilityVerdict", "Verdict", "classify"]
__version__ = "0.1.0"
