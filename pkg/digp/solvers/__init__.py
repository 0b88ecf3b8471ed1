"""
DiGP Solvers Package

Solvers locais disponíveis (um por nó):
- modOMP (omp)   - serial, irreversível
- modSP (sp)     - paralelo, reversível
- FROGS (frogs)  - serial, reversível

Importar este pacote registra os três solvers no SolverRegistry.
"""

from .base_solver import BaseSolver, SolverRegistry, prepare_inputs, register_solver
from .omp_solver import OMPSolver, mod_omp
from .sp_solver import SPSolver, mod_sp
from .frogs_solver import FROGSSolver, frogs

__all__ = [
    "BaseSolver",
    "SolverRegistry",
    "prepare_inputs",
    "register_solver",
    "OMPSolver",
    "SPSolver",
    "FROGSSolver",
    "mod_omp",
    "mod_sp",
    "frogs",
]
