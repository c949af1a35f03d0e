"""
小 N 精确期望
"""
from services.oracle.service import (
    DEFAULT_GRID,
    OBSERVABLES,
    OracleResult,
    OracleSpec,
    default_truncation,
    exact_expectation,
    named_observable,
)

__all__ = [
    "DEFAULT_GRID",
    "OBSERVABLES",
    "OracleResult",
    "OracleSpec",
    "default_truncation",
    "exact_expectation",
    "named_observable",
]
