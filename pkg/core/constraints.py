"""
Restrições de drift: índices suavizados (norma-p no tempo), agregação-q e
pico exato de referência

Potências altas (p, q até 10⁶) são avaliadas em espaço logarítmico com
`logsumexp`, que fatora o máximo antes de exponenciar.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

P_MIN, P_MAX = 100, 1_000_000


@dataclass(frozen=True)
class ConstraintParams:
    """Expoentes p (par, norma no tempo) e q (agregação) e regra de quadratura"""

    p: int = 100
    q: int = 100
    weights: str = "trapezoid"

    def __post_init__(self):
        if self.p < 2 or self.p % 2:
            raise ValueError(f"p deve ser par e >= 2 (recebido {self.p})")
        if self.q < 1:
            raise ValueError(f"q deve ser >= 1 (recebido {self.q})")
        if self.weights not in ("trapezoid", "rectangle"):
            raise ValueError(f"regra de quadratura desconhecida: {self.weights}")


@dataclass
class ContinuationSchedule:
    """Aumento gradual de p e q (início, passo, teto)"""

    p_start: int = 100
    p_step: int = 500
    p_cap: int = 1_000_000
    q_start: int = 100
    q_step: int = 500
    q_cap: int = 1_000_000
    p: Optional[int] = None
    q: Optional[int] = None

    def __post_init__(self):
        for name in ("p_start", "p_step", "p_cap"):
            if getattr(self, name) % 2:
                raise ValueError(f"{name} deve ser par")
        if self.p_step < 0 or self.q_step < 0:
            raise ValueError("passos de continuação devem ser não negativos")
        if self.p_cap < self.p_start or self.q_cap < self.q_start:
            raise ValueError("teto da continuação menor que o valor inicial")
        if self.p is None:
            self.p = self.p_start
        if self.q is None:
            self.q = self.q_start

    def params(self) -> ConstraintParams:
        return ConstraintParams(p=self.p, q=self.q)

    def advance(self) -> ConstraintParams:
        self.p = min(self.p + self.p_step, self.p_cap)
        self.q = min(self.q + self.q_step, self.q_cap)
        return self.params()

    @property
    def at_cap(self) -> bool:
        return self.p >= self.p_cap and self.q >= self.q_cap


@dataclass(frozen=True, eq=False)
class ConstraintValue:
    """g agregado, índices d̃ por drift e pico exato normalizado"""

    g: float
    d_tilde: np.ndarray
    d_max_exact: float
    params: ConstraintParams


def quadrature_weights(n_rows: int, dt: float, rule: str = "trapezoid") -> np.ndarray:
    """w_i = Δt no interior; Δt/2 nas extremidades (trapézio)"""
    w = np.full(n_rows, dt)
    if rule == "trapezoid":
        w[0] = w[-1] = 0.5 * dt
    else:
        w[0] = 0.0
    return w


def normalized_drifts(history, model) -> np.ndarray:
    """r_ij = (H u_i)_j / d_allow,j  [N+1 × N_drifts]"""
    return history.drifts(model.drift_transform) / model.d_allow


def _log_abs(r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(r))


def _smooth_from_ratios(r: np.ndarray, w: np.ndarray, p: int) -> np.ndarray:
    total = w.sum()
    log_r = _log_abs(r)
    out = np.zeros(r.shape[1])
    for j in range(r.shape[1]):
        if not np.any(r[:, j]):
            continue
        log_s = logsumexp(p * log_r[:, j], b=w)
        out[j] = np.exp((log_s - np.log(total)) / p)
    return out


def smooth_drift_indices(history, model, params: ConstraintParams) -> np.ndarray:
    """d̃_j = ((1/(t_f - t_0)) Σ_i w_i (H u_i / d_allow)_j^p)^(1/p)"""
    r = normalized_drifts(history, model)
    w = quadrature_weights(r.shape[0], history.dt, params.weights)
    return _smooth_from_ratios(r, w, params.p)


def aggregate(d_tilde: np.ndarray, q: int) -> float:
    """g = Σ d̃^(q+1) / Σ d̃^q - 1"""
    d_tilde = np.asarray(d_tilde, dtype=float)
    if np.any(d_tilde < 0):
        raise ValueError("índices d̃ devem ser não negativos")
    if not np.any(d_tilde):
        logger.debug("Agregação degenerada: todos os d̃ nulos, g = -1")
        return -1.0
    log_d = _log_abs(d_tilde)
    return float(np.exp(logsumexp((q + 1) * log_d) - logsumexp(q * log_d)) - 1.0)


def exact_peak(history, model) -> float:
    """max_i,j |H u_i|_j / d_allow,j"""
    return float(np.abs(normalized_drifts(history, model)).max())


def evaluate(history, model, params: ConstraintParams) -> ConstraintValue:
    d_tilde = smooth_drift_indices(history, model, params)
    return ConstraintValue(
        g=aggregate(d_tilde, params.q),
        d_tilde=d_tilde,
        d_max_exact=exact_peak(history, model),
        params=params,
    )


def aggregate_gradient(d_tilde: np.ndarray, q: int) -> np.ndarray:
    """∂g/∂d̃_j, escalado pelo maior d̃ (g é homogênea de grau 1 em d̃)"""
    d_tilde = np.asarray(d_tilde, dtype=float)
    if not np.any(d_tilde):
        return np.zeros_like(d_tilde)
    s = d_tilde / d_tilde.max()
    log_s = _log_abs(s)
    s_q = np.exp(q * log_s)
    s_q1 = np.exp((q + 1) * log_s)
    s_qm1 = np.exp((q - 1) * log_s) if q > 1 else np.ones_like(s)
    den = s_q.sum()
    num = s_q1.sum()
    return (q + 1) * s_q / den - q * s_qm1 * num / den ** 2


def dg_du_all(history, model, params: ConstraintParams, d_tilde: Optional[np.ndarray] = None) -> np.ndarray:
    """dg/du_i para todos os passos [N+1 × n_dof] (regra da cadeia por d̃ e pela agregação)"""
    r = normalized_drifts(history, model)
    w = quadrature_weights(r.shape[0], history.dt, params.weights)
    if d_tilde is None:
        d_tilde = _smooth_from_ratios(r, w, params.p)
    total = w.sum()

    # ∂d̃_j/∂r_ij = (w_i / T) sign(r_ij) (|r_ij| / d̃_j)^(p-1)
    safe = np.where(d_tilde > 0, d_tilde, 1.0)
    with np.errstate(divide="ignore"):
        log_ratio = _log_abs(r) - np.log(safe)
    ratio_pow = np.where(r != 0, np.exp((params.p - 1) * log_ratio), 0.0)
    dd_dr = (w[:, None] / total) * np.sign(r) * ratio_pow
    dd_dr[:, d_tilde <= 0] = 0.0

    dg_dr = dd_dr * aggregate_gradient(d_tilde, params.q)[None, :]
    return (dg_dr / model.d_allow) @ model.drift_transform


def dg_du(history, model, params: ConstraintParams, step: int) -> np.ndarray:
    """dg/du no passo `step`"""
    return dg_du_all(history, model, params)[step]
