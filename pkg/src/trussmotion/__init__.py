"""Motion planning for variable topology truss robots.

Layers, bottom up: geometry primitives, the truss graph model and its
constraint checks, link-vector kinematics, per-node free-space construction,
RRT geometry planning, split/merge topology planning, and rolling locomotion.
"""
from trussmotion.truss import PlannerConfig, TrussGraph, ValidationReport, validate_truss

__version__ = "0.1.0"

__all__ = [
    "PlannerConfig",
    "TrussGraph",
    "ValidationReport",
    "validate_truss",
    "__version__",
]
