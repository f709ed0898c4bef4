"""Nonlocal perimeters and three-phase clusters on intervals and pixel grids."""

from __future__ import annotations

__version__ = "1.0.0"

from .energy import AlphaWeights, EnergyBreakdown, SigmaWeights, alphas_from_sigmas, f_one, f_s, f_star
from .geometry import Domain1D, GridPartition2D, Interval, IntervalSet, LipschitzGraph, Partition1D

__all__ = [
    "AlphaWeights", "Domain1D", "EnergyBreakdown", "GridPartition2D", "Interval", "IntervalSet",
    "LipschitzGraph", "Partition1D", "SigmaWeights", "__version__", "alphas_from_sigmas",
    "f_one", "f_s", "f_star",
]
