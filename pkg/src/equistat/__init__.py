"""Exact checkers and solvers for substitutes, nonreversingness and equilibrium flows."""

from .corr import FiniteCorrespondence, Verdict, check_monotonicity, check_substitutes, classify
from .rat import Point, Rat, point, rat

__version__ = "0.1.0"

__all__ = [
    "FiniteCorrespondence",
    "Point",
    "Rat",
    "Verdict",
    "check_monotonicity",
    "check_substitutes",
    "classify",
    "point",
    "rat",
]
