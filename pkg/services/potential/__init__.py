"""外势"""
from services.potential.service import (
    builtin_quadratic,
    builtin_quartic,
    check_one_cut,
    divided_difference,
    evaluate,
)

__all__ = ["builtin_quadratic", "builtin_quartic", "check_one_cut", "divided_difference", "evaluate"]
