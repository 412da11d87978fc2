"""Minimax optimisation with linear constraints that couple the two players."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DimensionError, DivergenceError, DomainError, InfeasibilityError,
                     MinimaxError, NotApplicableError)
from .problem import (CouplingConstraints, ProblemConstants, ProblemInstance, feasibility_check,
                      lagrangian_eval, lagrangian_grads)
from .zoo import zoo_instance

__all__ = [
    "ConfigurationError", "CouplingConstraints", "DimensionError", "DivergenceError", "DomainError",
    "InfeasibilityError", "MinimaxError", "NotApplicableError", "ProblemConstants", "ProblemInstance",
    "feasibility_check", "lagrangian_eval", "lagrangian_grads", "zoo_instance",
]
