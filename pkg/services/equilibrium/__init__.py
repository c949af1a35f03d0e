"""平衡测度"""
from services.equilibrium.measure import (
    Branch,
    EquilibriumMeasure,
    Scales,
    b_of,
    from_above,
    solve_equilibrium,
)
from services.equilibrium.support import SupportInterval, SupportSolution, default_guess, solve_support

__all__ = [
    "Branch",
    "EquilibriumMeasure",
    "Scales",
    "SupportInterval",
    "SupportSolution",
    "b_of",
    "default_guess",
    "from_above",
    "solve_equilibrium",
    "solve_support",
]
