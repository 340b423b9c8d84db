"""Constraint-based structure discovery: CI tests, PC variants, run aggregation."""

from .citests import CITest, DSeparationOracle, FisherZTest, fisher_z
from .ensemble import (
    DiscoveryResult,
    DiscoveryRunStats,
    EnsembleConfig,
    ProbAdjacency,
    run_discovery_ensemble,
)
from .pc import pc_orient, pc_skeleton

__all__ = [
    "CITest",
    "DSeparationOracle",
    "DiscoveryResult",
    "DiscoveryRunStats",
    "EnsembleConfig",
    "FisherZTest",
    "ProbAdjacency",
    "fisher_z",
    "pc_orient",
    "pc_skeleton",
    "run_discovery_ensemble",
]
