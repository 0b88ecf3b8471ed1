"""
Base Solver - Interface abstrata para solvers locais

Interface padrão para todos os algoritmos de greedy pursuit executados
dentro de um nó. Garante que novos solvers implementem os métodos necessários
para serem usados pelo simulador distribuído e pelo runner de experimentos.

Solvers disponíveis:
- OMPSolver (omp_solver.py)     - modOMP, serial e irreversível
- SPSolver (sp_solver.py)       - modSP, paralelo e reversível
- FROGSSolver (frogs_solver.py) - FROGS, serial e reversível
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional
import logging

import numpy as np

from digp.pursuit_core import EMPTY_SUPPORT, PursuitResult, SupportSet, as_support, check_problem

logger = logging.getLogger(__name__)


def prepare_inputs(A, k_max: int, y, t_ini: Optional[SupportSet] = None, spare: int = 0):
    """
    Validar e normalizar as entradas de um solver.

    Args:
        A: Matriz de sensing M x N
        k_max: Cardinalidade desejada do support-set
        y: Vetor de medidas
        t_ini: Support-set inicial (0-based)
        spare: Dimensões livres exigidas além de K_max (FROGS exige 1)

    Returns:
        Tuple (A, y, t_ini) normalizados

    Raises:
        ValueError: Se K_max > M - spare ou |T_ini| > K_max
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    check_problem(A, y)
    t_ini = as_support(EMPTY_SUPPORT if t_ini is None else t_ini, A.shape[1])
    m = A.shape[0]
    if k_max < 0:
        raise ValueError(f"K_max must be non-negative, got {k_max}")
    if k_max > m - spare:
        raise ValueError(f"K_max={k_max} exceeds M - {spare} = {m - spare} (M={m})")
    if k_max > A.shape[1]:
        raise ValueError(f"K_max={k_max} exceeds the signal dimension N={A.shape[1]}")
    if len(t_ini) > k_max:
        raise ValueError(f"|T_ini|={len(t_ini)} exceeds K_max={k_max}")
    return A, y, t_ini


class BaseSolver(ABC):
    """
    Interface abstrata para todos os solvers locais.

    Todos os solvers devem herdar desta classe e implementar ``_solve``.
    A validação comum de entradas fica em ``solve``.
    """

    # Categorias de construção do support-set
    construction = "serial"
    reversible = False
    # Dimensões livres exigidas além de K_max
    spare_dimensions = 0

    def __init__(self):
        self.logger = logging.getLogger(self.__class__.__name__)

    def solve(
        self,
        A: np.ndarray,
        k_max: int,
        y: np.ndarray,
        t_ini: Optional[SupportSet] = None,
    ) -> PursuitResult:
        """
        Estimar o support-set e o sinal esparso de um nó.

        Args:
            A: Matriz de sensing M x N
            k_max: Cardinalidade desejada do support-set
            y: Vetor de medidas (comprimento M)
            t_ini: Support-set inicial (índices 0-based)

        Returns:
            PursuitResult com (support, estimate, residual_norm)

        Raises:
            ValueError: Se as dimensões ou cardinalidades forem inválidas
        """
        A, y, t_ini = prepare_inputs(A, k_max, y, t_ini, spare=self.spare_dimensions)
        return self._solve(A, k_max, y, t_ini)

    @abstractmethod
    def _solve(self, A: np.ndarray, k_max: int, y: np.ndarray, t_ini: SupportSet) -> PursuitResult:
        """Executar o algoritmo com entradas já validadas."""

    def get_solver_info(self) -> Dict[str, Any]:
        """
        Retornar informações do solver (metadados).

        Returns:
            Dict com informações:
            {
                "name": "frogs",
                "label": "FROGS",
                "construction": "serial",   # "serial" ou "parallel"
                "reversible": True
            }
        """
        return {
            "name": self.get_solver_name(),
            "label": self.get_solver_label(),
            "construction": self.construction,
            "reversible": self.reversible,
        }

    def get_solver_name(self) -> str:
        """Retornar nome técnico do solver (ex: "omp")"""
        return self.__class__.__name__.replace("Solver", "").lower()

    def get_solver_label(self) -> str:
        """Retornar label amigável do solver"""
        return self.__class__.__name__.replace("Solver", "")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(construction={self.construction}, reversible={self.reversible})"


class SolverRegistry:
    """
    Registrador de solvers disponíveis.

    Mantém referência de todos os solvers e permite seleção por nome.
    """

    _solvers: Dict[str, type] = {}

    @classmethod
    def register(cls, name: str, solver_class: type) -> None:
        """Registrar novo solver"""
        cls._solvers[name] = solver_class
        logger.debug(f"Solver registered: {name}")

    @classmethod
    def get_all(cls) -> Dict[str, type]:
        """Obter todos os solvers registrados"""
        return cls._solvers.copy()

    @classmethod
    def create(cls, name: str) -> BaseSolver:
        """
        Instanciar solver por nome.

        Raises:
            ValueError: Se o solver não estiver registrado
        """
        solver_class = cls._solvers.get(name)
        if solver_class is None:
            raise ValueError(f"Unknown solver: {name}. Available: {sorted(cls._solvers)}")
        return solver_class()


def register_solver(name: str):
    """
    Decorator para registrar solver automaticamente.

    Uso:
    @register_solver("omp")
    class OMPSolver(BaseSolver):
        ...
    """
    def decorator(cls):
        SolverRegistry.register(name, cls)
        return cls
    return decorator
