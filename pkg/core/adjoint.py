"""
Sensibilidade adjunta (discretizar-e-depois-diferenciar) da restrição
agregada de drift em relação às variáveis de projeto

Multiplicadores ξ_i = (λ_u, λ_v, λ_a) associados aos resíduos do passo i:

    R_u,i = M a_i + C v_i + K u_i + M e a_g,i
    R_v,i = -v_i + γ/(βΔt)(u_i - u_{i-1}) + (1 - γ/β) v_{i-1} + Δt (1 - γ/2β) a_{i-1}
    R_a,i = -a_i + 1/(βΔt²)(u_i - u_{i-1}) - 1/(βΔt) v_{i-1} - (1/2β - 1) a_{i-1}

A estacionariedade em (a_i, v_i, u_i) dá A ξ_i = b_i(ξ_{i+1}), resolvido de
i = N até 1 com A fatorada uma vez; ∇g_k = Σ_i v_iᵀ (∂C_d/∂x_k) λ_u,i.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from core import constraints
from core.constraints import ConstraintParams, ConstraintValue
from core.dynamics import GroundMotion, ResponseHistory, newmark_solve
from core.errors import SingularSystemError
from core.model import DesignVector, StructuralModel, assemble_added_damping
from core.scenarios import FailureScenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AdjointState:
    """Trajetórias adjuntas [N+1 × n_dof] e a matriz constante A"""

    lambda_u: np.ndarray
    lambda_v: np.ndarray
    lambda_a: np.ndarray
    A: np.ndarray


@dataclass(frozen=True, eq=False)
class Sensitivity:
    """Valor da restrição e gradiente para um par (cenário, registro)"""

    value: ConstraintValue
    gradient: np.ndarray
    history: ResponseHistory

    @property
    def g(self) -> float:
        return self.value.g


def adjoint_matrix(M, C, K, dt, beta=0.25, gamma=0.5) -> np.ndarray:
    """Matriz em blocos [3n × 3n] do sistema adjunto"""
    n = M.shape[0]
    I = np.eye(n)
    Z = np.zeros((n, n))
    a0 = 1.0 / (beta * dt ** 2)
    a1 = gamma / (beta * dt)
    return np.block([
        [M.T, Z, -I],
        [C.T, -I, Z],
        [K.T, a1 * I, a0 * I],
    ])


def solve_adjoint(
    model: StructuralModel,
    C_d: np.ndarray,
    history: ResponseHistory,
    forcing: np.ndarray,
    beta: float = 0.25,
    gamma: float = 0.5,
) -> AdjointState:
    """Recursão adjunta de trás para frente com forçamento dg/du_i [N+1 × n]"""
    M, K = model.mass, model.stiffness
    C = model.inherent_damping + C_d
    dt = history.dt
    n = model.n_dof
    N = history.n_steps

    A = adjoint_matrix(M, C, K, dt, beta, gamma)
    lu, piv = linalg.lu_factor(A)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * diag.max() * A.shape[0]:
        raise SingularSystemError("matriz do sistema adjunto singular")

    a0 = 1.0 / (beta * dt ** 2)
    a1 = gamma / (beta * dt)
    a2 = 1.0 / (beta * dt)
    c_va = dt * (1.0 - gamma / (2.0 * beta))
    c_aa = 1.0 / (2.0 * beta) - 1.0
    c_vv = 1.0 - gamma / beta

    lam_u = np.zeros((N + 1, n))
    lam_v = np.zeros((N + 1, n))
    lam_a = np.zeros((N + 1, n))
    b = np.zeros(3 * n)

    for i in range(N, 0, -1):
        if i == N:
            b[:2 * n] = 0.0
            b[2 * n:] = -forcing[N]
        else:
            lv, la = lam_v[i + 1], lam_a[i + 1]
            b[:n] = -c_va * lv + c_aa * la
            b[n:2 * n] = -c_vv * lv + a2 * la
            b[2 * n:] = a1 * lv + a0 * la - forcing[i]
        xi = linalg.lu_solve((lu, piv), b)
        lam_u[i], lam_v[i], lam_a[i] = xi[:n], xi[n:2 * n], xi[2 * n:]

    # equilíbrio inicial M a_0 = -C v_0 - K u_0 - M e a_g,0 (relevante só com v_0 ≠ 0)
    if N >= 1 and np.any(history.v0):
        rhs = -c_va * lam_v[1] + c_aa * lam_a[1]
        lam_u[0] = linalg.solve(M.T, rhs)

    return AdjointState(lambda_u=lam_u, lambda_v=lam_v, lambda_a=lam_a, A=A)


def accumulate_gradient(
    velocities: np.ndarray,
    lambda_u: np.ndarray,
    model: StructuralModel,
    c_bar: float,
    retention: np.ndarray,
) -> np.ndarray:
    """∇g_k = c̄ ν_k Σ_i v_iᵀ T_kᵀT_k λ_u,i"""
    raw = np.einsum("ti,kij,tj->k", velocities, model.damper_outer, lambda_u)
    return c_bar * retention * raw


def constraint_and_gradient(
    model: StructuralModel,
    design: DesignVector,
    scenario: FailureScenario,
    gm: GroundMotion,
    params: ConstraintParams,
    history: Optional[ResponseHistory] = None,
    beta: float = 0.25,
    gamma: float = 0.5,
) -> Sensitivity:
    """Análise primal (se necessária) + adjunta para um par (cenário, registro)"""
    C_d = assemble_added_damping(model, design, scenario)
    if history is None:
        history = newmark_solve(model, C_d, gm, beta, gamma)
    value = constraints.evaluate(history, model, params)
    forcing = constraints.dg_du_all(history, model, params, d_tilde=value.d_tilde)
    state = solve_adjoint(model, C_d, history, forcing, beta, gamma)
    gradient = accumulate_gradient(
        history.v, state.lambda_u, model, design.c_bar, scenario.retention(model.n_dampers))
    return Sensitivity(value=value, gradient=gradient, history=history)


def adjoint_gradient(
    model: StructuralModel,
    design: DesignVector,
    scenario: FailureScenario,
    gm: GroundMotion,
    params: ConstraintParams,
    history: Optional[ResponseHistory] = None,
) -> np.ndarray:
    """Gradiente de g em relação a x pelo método adjunto"""
    return constraint_and_gradient(model, design, scenario, gm, params, history).gradient


def constraint_at(
    model: StructuralModel,
    x: np.ndarray,
    c_bar: float,
    scenario: FailureScenario,
    gm: GroundMotion,
    params: ConstraintParams,
) -> float:
    """g(x) sem validação de caixa (usado pelas diferenças finitas)"""
    coeffs = c_bar * np.asarray(x, dtype=float) * scenario.retention(model.n_dampers)
    C_d = np.tensordot(coeffs, model.damper_outer, axes=1)
    history = newmark_solve(model, C_d, gm)
    return constraints.evaluate(history, model, params).g


def finite_difference_gradient(
    model: StructuralModel,
    design: DesignVector,
    scenario: FailureScenario,
    gm: GroundMotion,
    params: ConstraintParams,
    h: float = 1e-6,
) -> np.ndarray:
    """Diferenças finitas centrais de g(x)"""
    x = design.x
    grad = np.zeros(x.size)
    for k in range(x.size):
        step = np.zeros(x.size)
        step[k] = h
        g_plus = constraint_at(model, x + step, design.c_bar, scenario, gm, params)
        g_minus = constraint_at(model, x - step, design.c_bar, scenario, gm, params)
        grad[k] = (g_plus - g_minus) / (2.0 * h)
    return grad


@dataclass(frozen=True, eq=False)
class GradientCheck:
    scenario_id: int
    record: str
    params: ConstraintParams
    adjoint: np.ndarray
    finite_difference: np.ndarray

    @property
    def relative_errors(self) -> np.ndarray:
        return np.abs(self.adjoint - self.finite_difference) / np.maximum(1.0, np.abs(self.finite_difference))

    @property
    def max_relative_error(self) -> float:
        return float(self.relative_errors.max())


def check_gradients(
    model: StructuralModel,
    design: DesignVector,
    scenario: FailureScenario,
    gm: GroundMotion,
    params: ConstraintParams,
    h: float = 1e-6,
) -> GradientCheck:
    """Compara o gradiente adjunto com diferenças finitas centrais"""
    adj = adjoint_gradient(model, design, scenario, gm, params)
    fd = finite_difference_gradient(model, design, scenario, gm, params, h)
    check = GradientCheck(scenario.id, gm.name, params, adj, fd)
    logger.info(
        f"🔍 Gradiente cenário {scenario.label()} / {gm.name} (p={params.p}, q={params.q}): "
        f"erro relativo máx. {check.max_relative_error:.2e}")
    return check
