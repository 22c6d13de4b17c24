"""
Simplex primal com variáveis limitadas (tableau denso, regra de Bland)

Resolve   min cᵀx   s.a.   A x ≤ b,   l ≤ x ≤ u
em duas fases; artificiais ficam presas em zero na fase 2. Para conjuntos
de planos inconsistentes há o modo elástico: minimiza a violação total e,
com ela fixada, o custo.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import InfeasibleLPError, LPIterationLimitError, UnboundedLPError

logger = logging.getLogger(__name__)

STATUS_OPTIMAL = "optimal"
STATUS_ELASTIC = "elastic"


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    violation: float = 0.0


class BoundedSimplex:
    """Tableau B⁻¹A com variáveis não básicas no limite inferior (0) ou superior"""

    def __init__(self, A, rhs, upper, tol=1e-9, max_iter=None):
        self.T = np.array(A, dtype=float)
        self.beta = np.array(rhs, dtype=float)
        self.upper = np.array(upper, dtype=float)
        m, n = self.T.shape
        self.basis = np.full(m, -1)
        self.at_upper = np.zeros(n, dtype=bool)
        self.tol = tol
        self.max_iter = max_iter or 50 * (m + n) + 100
        self.iterations = 0

    def set_basis(self, basis):
        self.basis = np.asarray(basis, dtype=int)

    def values(self) -> np.ndarray:
        out = np.where(self.at_upper, self.upper, 0.0)
        out[self.basis] = self.beta
        return out

    def optimize(self, cost):
        cost = np.asarray(cost, dtype=float)
        n = self.T.shape[1]
        is_basic = np.zeros(n, dtype=bool)
        while True:
            if self.iterations >= self.max_iter:
                raise LPIterationLimitError(f"simplex excedeu {self.max_iter} iterações")
            is_basic[:] = False
            is_basic[self.basis] = True
            reduced = cost - cost[self.basis] @ self.T

            # Bland: menor índice elegível
            eligible = ~is_basic & (
                (~self.at_upper & (reduced < -self.tol) & (self.upper > 0))
                | (self.at_upper & (reduced > self.tol))
            )
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return
            self._step(int(candidates[0]))
            self.iterations += 1

    def _ratio_test(self, alpha, piv_tol):
        basic_upper = self.upper[self.basis]
        theta = np.full(alpha.size, np.inf)
        up = alpha > piv_tol
        down = (alpha < -piv_tol) & np.isfinite(basic_upper)
        theta[up] = np.maximum(self.beta[up], 0.0) / alpha[up]
        theta[down] = np.maximum(basic_upper[down] - self.beta[down], 0.0) / -alpha[down]
        if theta.size == 0 or not np.isfinite(theta.min()):
            return np.inf, -1
        theta_row = theta.min()
        ties = np.flatnonzero(theta <= theta_row + 1e-14)
        return theta_row, int(ties[np.argmin(self.basis[ties])])

    def _step(self, j):
        sigma = -1.0 if self.at_upper[j] else 1.0
        col = self.T[:, j].copy()
        alpha = sigma * col
        piv_tol = 1e-11 * max(1.0, np.abs(col).max()) if col.size else 1e-11
        theta_row, leave = self._ratio_test(alpha, piv_tol)

        theta_flip = self.upper[j]
        if theta_flip <= theta_row:
            if not np.isfinite(theta_flip):
                raise UnboundedLPError("problema linear ilimitado")
            self.beta -= sigma * theta_flip * col
            self.at_upper[j] = not self.at_upper[j]
            return

        self.beta -= sigma * theta_row * col
        entering_value = theta_row if sigma > 0 else self.upper[j] - theta_row
        leaving = self.basis[leave]
        self.at_upper[leaving] = alpha[leave] < 0

        self.T[leave] /= col[leave]
        col[leave] = 0.0
        self.T -= np.outer(col, self.T[leave])
        self.beta[leave] = entering_value
        self.basis[leave] = j
        self.at_upper[j] = False
        np.clip(self.beta, 0.0, None, out=self.beta)


def solve_bounded_lp(
    c,
    A_ub,
    b_ub,
    lower,
    upper,
    tol: float = 1e-9,
    max_iter: Optional[int] = None,
) -> LPResult:
    """min cᵀx s.a. A_ub x ≤ b_ub, lower ≤ x ≤ upper (limites inferiores finitos)"""
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b = np.asarray(b_ub, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(~np.isfinite(lower)):
        raise ValueError("limites inferiores devem ser finitos")
    if np.any(upper < lower - tol):
        raise InfeasibleLPError("caixa vazia: limite superior menor que o inferior")
    m = A.shape[0]

    rhs = b - A @ lower
    negative = rhs < 0
    n_art = int(negative.sum())
    sign = np.where(negative, -1.0, 1.0)

    tableau = np.zeros((m, n + m + n_art))
    tableau[:, :n] = sign[:, None] * A
    tableau[:, n:n + m] = np.diag(sign)
    basis = np.arange(n, n + m)
    art_rows = np.flatnonzero(negative)
    for k, i in enumerate(art_rows):
        tableau[i, n + m + k] = 1.0
        basis[i] = n + m + k

    ub = np.concatenate([np.maximum(upper - lower, 0.0), np.full(m + n_art, np.inf)])
    scale = 1.0 + (np.abs(rhs).max() if m else 0.0)
    solver = BoundedSimplex(tableau, np.abs(rhs), ub, tol=tol, max_iter=max_iter)
    solver.set_basis(basis)

    if n_art:
        phase1 = np.zeros(tableau.shape[1])
        phase1[n + m:] = 1.0
        solver.optimize(phase1)
        infeasibility = float(solver.values()[n + m:].sum())
        if infeasibility > tol * scale:
            raise InfeasibleLPError(f"subproblema linear inviável (violação {infeasibility:.3e})")
        solver.upper[n + m:] = 0.0

    full_cost = np.zeros(tableau.shape[1])
    full_cost[:n] = c
    solver.optimize(full_cost)

    x = lower + solver.values()[:n]
    x = np.clip(x, lower, upper)
    return LPResult(x=x, objective=float(c @ x), status=STATUS_OPTIMAL, iterations=solver.iterations)


def solve_elastic(c, A_ub, b_ub, lower, upper, tol: float = 1e-9) -> LPResult:
    """Modo elástico: min Σe s.a. A x - e ≤ b; depois min cᵀx com Σe no mínimo encontrado"""
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b = np.asarray(b_ub, dtype=float).reshape(-1)
    m = A.shape[0]

    A_el = np.hstack([A, -np.eye(m)])
    lo = np.concatenate([lower, np.zeros(m)])
    hi = np.concatenate([upper, np.full(m, np.inf)])
    stage1 = solve_bounded_lp(np.concatenate([np.zeros(n), np.ones(m)]), A_el, b, lo, hi, tol=tol)
    violation = float(stage1.x[n:].sum())

    cap_row = np.concatenate([np.zeros(n), np.ones(m)])
    A2 = np.vstack([A_el, cap_row])
    b2 = np.concatenate([b, [violation * (1.0 + 1e-9) + tol]])
    stage2 = solve_bounded_lp(np.concatenate([c, np.zeros(m)]), A2, b2, lo, hi, tol=tol)
    x = stage2.x[:n]
    logger.warning(f"⚠️ Subproblema linear inviável; modo elástico com violação total {violation:.3e}")
    return LPResult(
        x=x,
        objective=float(c @ x),
        status=STATUS_ELASTIC,
        iterations=stage1.iterations + stage2.iterations,
        violation=violation,
    )
