"""
modSP Solver - Subspace Pursuit com support-set inicial

Versão modificada do SP: a inicialização une os K_max maiores índices do
matched filter com T_ini, e o laço expand/prune continua enquanto a norma
do resíduo diminuir estritamente. Com T_ini vazio reduz-se ao SP padrão.

Características:
- Paralelo: K_max candidatos por iteração
- Reversível: índices ruins podem sair em iterações futuras
- Retorna a iteração anterior (a melhor) quando o resíduo para de cair
"""

import logging

import numpy as np

from digp.config import MODSP_MAX_ITERATIONS
from digp.pursuit_core import (
    EMPTY_SUPPORT,
    PursuitResult,
    SupportSet,
    least_squares_on_support,
    max_indices,
    support_residual,
    top_within,
)
from digp.solvers.base_solver import BaseSolver, prepare_inputs, register_solver

logger = logging.getLogger(__name__)


def _expand(matched: np.ndarray, k_max: int, base: SupportSet, m: int) -> SupportSet:
    """União T' = max(matched, K_max) ∪ base, truncada a M índices se necessário."""
    union = tuple(sorted(set(max_indices(matched, k_max)) | set(base)))
    if len(union) > m:
        union = top_within(matched, union, m)
    return union


def _prune(A: np.ndarray, y: np.ndarray, union: SupportSet, k_max: int) -> SupportSet:
    x_hat = least_squares_on_support(A, y, union)
    return top_within(x_hat, union, k_max)


def mod_sp(A, k_max: int, y, t_ini: SupportSet = EMPTY_SUPPORT) -> PursuitResult:
    """
    Executar modSP.

    Args:
        A: Matriz de sensing M x N
        k_max: Cardinalidade final do support-set
        y: Vetor de medidas
        t_ini: Support-set inicial (semente da primeira união)

    Returns:
        PursuitResult da melhor iteração; ``diagnostics["residual_norms"]``
        guarda a sequência de normas observadas (inclui a rejeitada)

    Raises:
        ValueError: Se K_max > M ou |T_ini| > K_max
    """
    A, y, t_ini = prepare_inputs(A, k_max, y, t_ini)
    return _mod_sp(A, k_max, y, t_ini)


def _mod_sp(A: np.ndarray, k_max: int, y: np.ndarray, t_ini: SupportSet) -> PursuitResult:
    m = A.shape[0]

    support = _prune(A, y, _expand(A.T @ y, k_max, t_ini, m), k_max)
    r = support_residual(A, y, support)
    norm = float(np.linalg.norm(r))
    norms = [norm]

    passes = 0
    capped = False
    while True:
        if passes >= MODSP_MAX_ITERATIONS:
            capped = True
            logger.warning(f"modSP stopped at the {MODSP_MAX_ITERATIONS}-iteration cap (eta={norm:.3e})")
            break
        passes += 1
        candidate = _prune(A, y, _expand(A.T @ r, k_max, support, m), k_max)
        r_candidate = support_residual(A, y, candidate)
        norm_candidate = float(np.linalg.norm(r_candidate))
        norms.append(norm_candidate)
        if norm_candidate >= norm:
            break
        support, r, norm = candidate, r_candidate, norm_candidate

    return PursuitResult(
        support=support,
        estimate=least_squares_on_support(A, y, support),
        residual_norm=norm,
        iterations=passes,
        diagnostics={"residual_norms": norms, "capped": capped},
    )


# ============================================================================
# SP SOLVER CLASS
# ============================================================================

@register_solver("sp")
class SPSolver(BaseSolver):
    """modSP: paralelo, reversível."""

    construction = "parallel"
    reversible = True

    def _solve(self, A, k_max, y, t_ini):
        return _mod_sp(A, k_max, y, t_ini)

    def get_solver_label(self) -> str:
        return "modSP"


__all__ = ["mod_sp", "SPSolver"]
