from .program import (
    ConvexProgram,
    FeasibilityReport,
    VariableSpace,
    check_feasible,
)
from .solver import Solution, solve

__all__ = [
    "ConvexProgram",
    "FeasibilityReport",
    "Solution",
    "VariableSpace",
    "check_feasible",
    "solve",
]
