"""
DiGP - distributed greedy pursuit for jointly sparse signals

Local solvers (modOMP, modSP, FROGS), their distributed versions
(DiOMP, DiSP, DiFROGS) over arbitrary directed networks, and a Monte-Carlo
experiment runner.
"""

__version__ = "1.0.0"

from digp.pursuit_core import PursuitResult, SupportSet
from digp.solvers import SolverRegistry, frogs, mod_omp, mod_sp

__all__ = [
    "__version__",
    "PursuitResult",
    "SupportSet",
    "SolverRegistry",
    "mod_omp",
    "mod_sp",
    "frogs",
]
