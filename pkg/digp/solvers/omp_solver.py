"""
modOMP Solver - OMP com support-set inicial

Versão modificada do OMP que continua a construção do support-set a partir
de um T_ini fornecido. Com T_ini vazio reduz-se ao OMP padrão.

Características:
- Serial: um índice por iteração (máximo do matched filter)
- Irreversível: índices escolhidos nunca são removidos
- Iterações exatas: K_max - |T_ini|
"""

import numpy as np

from digp.pursuit_core import (
    EMPTY_SUPPORT,
    PursuitResult,
    SupportSet,
    least_squares_on_support,
    support_residual,
)
from digp.solvers.base_solver import BaseSolver, prepare_inputs, register_solver


def mod_omp(A, k_max: int, y, t_ini: SupportSet = EMPTY_SUPPORT) -> PursuitResult:
    """
    Executar modOMP.

    Args:
        A: Matriz de sensing M x N
        k_max: Cardinalidade final do support-set
        y: Vetor de medidas
        t_ini: Support-set inicial (contido na saída)

    Returns:
        PursuitResult com |support| = k_max e iterations = k_max - |t_ini|

    Raises:
        ValueError: Se K_max > M ou |T_ini| > K_max
    """
    A, y, t_ini = prepare_inputs(A, k_max, y, t_ini)
    return _mod_omp(A, k_max, y, t_ini)


def _mod_omp(A: np.ndarray, k_max: int, y: np.ndarray, t_ini: SupportSet) -> PursuitResult:
    support = t_ini
    r = support_residual(A, y, support)
    iterations = 0
    while len(support) < k_max:
        correlation = np.abs(A.T @ r)
        if support:
            correlation[list(support)] = -np.inf
        tau = int(np.argmax(correlation))
        support = tuple(sorted(support + (tau,)))
        r = support_residual(A, y, support)
        iterations += 1

    return PursuitResult(
        support=support,
        estimate=least_squares_on_support(A, y, support),
        residual_norm=float(np.linalg.norm(r)),
        iterations=iterations,
    )


# ============================================================================
# OMP SOLVER CLASS
# ============================================================================

@register_solver("omp")
class OMPSolver(BaseSolver):
    """modOMP: serial, irreversível."""

    construction = "serial"
    reversible = False

    def _solve(self, A, k_max, y, t_ini):
        return _mod_omp(A, k_max, y, t_ini)

    def get_solver_label(self) -> str:
        return "modOMP"


__all__ = ["mod_omp", "OMPSolver"]
