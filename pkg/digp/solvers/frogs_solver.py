"""
FROGS Solver - Forward-Reverse Orthogonal Greedy Search

Algoritmo serial e reversível. Inicializa com modOMP, ordena os resíduos
numa escada indexada pela cardinalidade e então alterna:

    forward_add   -> cresce o support-set em um índice
    reverse_fetch -> tenta trocar o support-set de cardinalidade k por um
                     subconjunto melhor do support-set de cardinalidade k+1

Um passo reverso só é aceito quando o resíduo diminui estritamente.

Características:
- Serial: um índice por passo forward
- Reversível: corrige erros herdados de T_ini
- Exige K_max <= M - 1 (forward_add precisa de uma dimensão livre)
"""

import logging

import numpy as np

from digp.config import FROGS_MAX_FORWARD_FACTOR
from digp.pursuit_core import (
    EMPTY_SUPPORT,
    PursuitResult,
    SupportSet,
    forward_add,
    least_squares_on_support,
    reverse_fetch,
    support_residual,
    top_within,
)
from digp.solvers.base_solver import BaseSolver, prepare_inputs, register_solver
from digp.solvers.omp_solver import _mod_omp

logger = logging.getLogger(__name__)


def frogs(A, k_max: int, y, t_ini: SupportSet = EMPTY_SUPPORT) -> PursuitResult:
    """
    Executar FROGS.

    Args:
        A: Matriz de sensing M x N
        k_max: Cardinalidade final do support-set
        y: Vetor de medidas
        t_ini: Support-set inicial passado ao modOMP da inicialização

    Returns:
        PursuitResult com |support| = k_max. ``iterations`` conta as chamadas
        de forward_add; ``diagnostics`` traz ``reverse_accepts``,
        ``init_residual_norm`` e ``capped``

    Raises:
        ValueError: Se K_max >= M ou |T_ini| > K_max
    """
    A, y, t_ini = prepare_inputs(A, k_max, y, t_ini, spare=FROGSSolver.spare_dimensions)
    return _frogs(A, k_max, y, t_ini)


def _frogs(A: np.ndarray, k_max: int, y: np.ndarray, t_ini: SupportSet) -> PursuitResult:
    init = _mod_omp(A, k_max, y, t_ini)

    # Escada: slots 0..K_max+1, slot l guarda (T_l, r_l) com |T_l| = l
    supports = [EMPTY_SUPPORT] * (k_max + 2)
    residuals = [None] * (k_max + 2)
    norms = [np.inf] * (k_max + 2)
    for l in range(k_max + 1):
        supports[l] = top_within(init.estimate, init.support, l)
        residuals[l] = support_residual(A, y, supports[l])
        norms[l] = float(np.linalg.norm(residuals[l]))

    best_support, best_norm = supports[k_max], norms[k_max]

    def write(level, support, r):
        nonlocal best_support, best_norm
        supports[level], residuals[level] = support, r
        norms[level] = float(np.linalg.norm(r))
        if level == k_max and norms[level] < best_norm:
            best_support, best_norm = support, norms[level]

    max_forward = FROGS_MAX_FORWARD_FACTOR * (k_max + 1)
    forward_steps = 0
    reverse_accepts = 0
    capped = False

    k = k_max
    while k != k_max + 1:
        if forward_steps >= max_forward:
            capped = True
            logger.warning(f"FROGS stopped after {forward_steps} forward steps (K_max={k_max})")
            break
        r_next, t_next = forward_add(A, y, residuals[k], supports[k])
        write(k + 1, t_next, r_next)
        forward_steps += 1

        while k > 0:
            r_prime, t_prime = reverse_fetch(A, y, supports[k + 1], k)
            if float(np.linalg.norm(r_prime)) < norms[k]:
                write(k, t_prime, r_prime)
                reverse_accepts += 1
                k -= 1
            else:
                break
        k += 1

    return PursuitResult(
        support=best_support,
        estimate=least_squares_on_support(A, y, best_support),
        residual_norm=best_norm,
        iterations=forward_steps,
        diagnostics={
            "reverse_accepts": reverse_accepts,
            "init_residual_norm": init.residual_norm,
            "capped": capped,
        },
    )


# ============================================================================
# FROGS SOLVER CLASS
# ============================================================================

@register_solver("frogs")
class FROGSSolver(BaseSolver):
    """FROGS: serial, reversível."""

    construction = "serial"
    reversible = True
    spare_dimensions = 1

    def _solve(self, A, k_max, y, t_ini):
        return _frogs(A, k_max, y, t_ini)

    def get_solver_label(self) -> str:
        return "FROGS"


__all__ = ["frogs", "FROGSSolver"]
