"""Matrix-product-state engine: snake mapping, automaton MPO, TDVP."""

from .ordering import snake_order
from .state import MpsState
from .mpo import HamiltonianOperator
from .tdvp import tdvp_evolve

__all__ = ["snake_order", "MpsState", "HamiltonianOperator", "tdvp_evolve"]
