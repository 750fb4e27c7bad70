from .problem import AffineConicBuilder, Cone, ConicProblem, triu_index
from .sdpa import export_sdpa, import_sdpa
from .solver import (INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, UNBOUNDED, ConicSolution,
                     solve)

__all__ = [
    "AffineConicBuilder", "Cone", "ConicProblem", "ConicSolution", "triu_index",
    "export_sdpa", "import_sdpa", "solve",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NUMERICAL_FAILURE",
]
