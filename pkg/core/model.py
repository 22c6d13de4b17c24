"""
Modelo estrutural linear, amortecimento inerente (Rayleigh) e matriz de
amortecimento adicional dependente do projeto

Unidades: kN, m, s, ton.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from core.config import settings
from core.errors import EigenConvergenceError, ModelValidationError, SingularSystemError
from core.scenarios import NO_FAILURE, FailureScenario

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StructuralModel:
    """Modelo estrutural montado (matrizes densas)"""

    mass: np.ndarray
    stiffness: np.ndarray
    influence: np.ndarray
    drift_transform: np.ndarray
    d_allow: np.ndarray
    damper_transforms: Tuple[np.ndarray, ...]
    inherent_damping: Optional[np.ndarray] = None
    name: str = "model"
    damper_labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        mass = _frozen(self.mass)
        stiffness = _frozen(self.stiffness)
        n = mass.shape[0] if mass.ndim == 2 else -1

        if mass.ndim != 2 or mass.shape != (n, n):
            raise ModelValidationError(f"massa deve ser quadrada, recebido {mass.shape}", field="mass")
        if stiffness.shape != (n, n):
            raise ModelValidationError(
                f"rigidez deve ter dimensão {n}x{n}, recebido {stiffness.shape}", field="stiffness")
        if not np.allclose(mass, mass.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(mass).max())):
            raise ModelValidationError("massa não é simétrica", field="mass")
        if not np.allclose(stiffness, stiffness.T, rtol=1e-10,
                           atol=1e-12 * max(1.0, np.abs(stiffness).max())):
            raise ModelValidationError("rigidez não é simétrica", field="stiffness")
        try:
            linalg.cho_factor(mass)
        except linalg.LinAlgError:
            raise ModelValidationError("massa não é positiva definida", field="mass") from None

        influence = _frozen(self.influence).reshape(-1)
        if influence.shape != (n,):
            raise ModelValidationError(
                f"vetor de influência deve ter {n} entradas, recebido {influence.size}", field="influence")

        H = _frozen(np.atleast_2d(self.drift_transform))
        if H.shape[1] != n:
            raise ModelValidationError(
                f"drift_transform deve ter {n} colunas, recebido {H.shape[1]}", field="drift_transform")
        d_allow = _frozen(self.d_allow).reshape(-1)
        if d_allow.shape != (H.shape[0],):
            raise ModelValidationError(
                f"d_allow deve ter {H.shape[0]} entradas (uma por drift), recebido {d_allow.size}",
                field="d_allow")
        if np.any(d_allow <= 0):
            raise ModelValidationError("todas as entradas de d_allow devem ser > 0", field="d_allow")

        transforms = []
        for i, T in enumerate(self.damper_transforms):
            T = _frozen(np.atleast_2d(T))
            if T.shape[1] != n:
                raise ModelValidationError(
                    f"transformação do amortecedor {i + 1} deve ter {n} colunas, recebido {T.shape[1]}",
                    field="dampers")
            if not np.any(T):
                raise ModelValidationError(f"transformação do amortecedor {i + 1} é nula", field="dampers")
            transforms.append(T)
        if not transforms:
            raise ModelValidationError("nenhum amortecedor candidato definido", field="dampers")

        if self.inherent_damping is None:
            C_s = _frozen(np.zeros((n, n)))
        else:
            C_s = _frozen(self.inherent_damping)
            if C_s.shape != (n, n):
                raise ModelValidationError(
                    f"inherent_damping deve ter dimensão {n}x{n}, recebido {C_s.shape}",
                    field="inherent_damping")

        labels = tuple(self.damper_labels) or tuple(str(i + 1) for i in range(len(transforms)))
        if len(labels) != len(transforms):
            raise ModelValidationError("damper_labels deve ter um rótulo por amortecedor", field="dampers")

        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "stiffness", stiffness)
        object.__setattr__(self, "influence", influence)
        object.__setattr__(self, "drift_transform", H)
        object.__setattr__(self, "d_allow", d_allow)
        object.__setattr__(self, "damper_transforms", tuple(transforms))
        object.__setattr__(self, "inherent_damping", C_s)
        object.__setattr__(self, "damper_labels", labels)

    @property
    def n_dof(self) -> int:
        return self.mass.shape[0]

    @property
    def n_dampers(self) -> int:
        return len(self.damper_transforms)

    @property
    def n_drifts(self) -> int:
        return self.drift_transform.shape[0]

    @cached_property
    def damper_outer(self) -> np.ndarray:
        """Pilha [N_d, n_dof, n_dof] com T_iᵀ T_i"""
        out = np.stack([T.T @ T for T in self.damper_transforms])
        out.setflags(write=False)
        return out

    def with_inherent_damping(self, C_s) -> "StructuralModel":
        return replace(self, inherent_damping=C_s)


@dataclass(frozen=True, eq=False)
class DesignVector:
    """Variáveis normalizadas x ∈ [0,1]^N_d e escala c̄ (kNs/m)"""

    x: np.ndarray
    c_bar: float = 150000.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
            raise ValueError(f"variáveis de projeto fora de [0, 1]: {x}")
        x = _frozen(np.clip(x, 0.0, 1.0))
        if self.c_bar <= 0:
            raise ValueError("c_bar deve ser positivo")
        object.__setattr__(self, "x", x)

    @classmethod
    def uniform(cls, n_d: int, value: float, c_bar: float) -> "DesignVector":
        return cls(np.full(n_d, value), c_bar)

    @property
    def size(self) -> int:
        return self.x.size

    def damping(self) -> np.ndarray:
        """Coeficientes físicos c_d,i = c̄·x_i (kNs/m)"""
        return self.c_bar * self.x

    def cost(self) -> float:
        """J(x) = Σ x_i"""
        return float(self.x.sum())

    def total_damping(self) -> float:
        return float(self.damping().sum())

    def with_x(self, x) -> "DesignVector":
        return DesignVector(x, self.c_bar)


def compute_lowest_modes(
    model: StructuralModel,
    k: int,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> List[Tuple[float, np.ndarray]]:
    """Menores k autopares generalizados de (K, M) por iteração inversa com deflação

    Retorna [(ω, φ)] em ordem crescente de ω, com φᵀMφ = 1.
    """
    max_iter = max_iter or settings.eig_max_iter
    tol = tol or settings.eig_tol
    n = model.n_dof
    if not 1 <= k <= n:
        raise ValueError(f"k={k} deve estar em 1..{n}")

    M, K = model.mass, model.stiffness
    try:
        linalg.cho_factor(M)
    except linalg.LinAlgError:
        raise SingularSystemError("matriz de massa singular ou não positiva definida") from None

    # deslocamento negativo torna K - σM definida mesmo para modos de corpo rígido
    shift = 0.0
    try:
        factor = linalg.cho_factor(K)
    except linalg.LinAlgError:
        shift = -1e-3 * np.trace(K) / np.trace(M) if np.trace(K) > 0 else -1.0
        try:
            factor = linalg.cho_factor(K - shift * M)
        except linalg.LinAlgError:
            raise SingularSystemError("K - σM não pôde ser fatorada na iteração inversa") from None

    scale = np.linalg.norm(K, "fro") + np.linalg.norm(M, "fro")
    rng = np.random.default_rng(2024)
    found: List[np.ndarray] = []
    values: List[float] = []

    def deflate(v):
        for phi in found:
            v = v - phi * (phi @ (M @ v))
        return v

    for mode in range(k):
        x = deflate(rng.standard_normal(n) + 1.0)
        x /= np.sqrt(x @ M @ x)
        lam = x @ K @ x
        for it in range(max_iter):
            y = deflate(linalg.cho_solve(factor, M @ x))
            norm = np.sqrt(y @ M @ y)
            if norm == 0.0:
                raise EigenConvergenceError(f"vetor de iteração colapsou no modo {mode + 1}")
            x = y / norm
            lam = x @ K @ x
            residual = np.linalg.norm(K @ x - lam * (M @ x))
            floor = 64 * _EPS * (scale + abs(lam) * np.linalg.norm(M, "fro")) * np.linalg.norm(x)
            if residual <= max(tol * np.linalg.norm(K @ x), floor):
                break
        else:
            raise EigenConvergenceError(
                f"iteração inversa não convergiu para o modo {mode + 1} em {max_iter} iterações")
        # sinal determinístico: maior componente positiva
        if x[np.argmax(np.abs(x))] < 0:
            x = -x
        found.append(x)
        values.append(lam)
        logger.debug(f"Modo {mode + 1}: λ={lam:.6g} após {it + 1} iterações")

    order = np.argsort(values)
    return [(float(np.sqrt(max(values[i], 0.0))), found[i]) for i in order]


def build_rayleigh(model: StructuralModel, zeta: float, modes: Tuple[float, float]) -> np.ndarray:
    """C_s = a₀M + a₁K ajustado para razão ζ nas frequências ω₁ e ω₂"""
    w1, w2 = sorted(float(w) for w in modes)
    if w1 <= 0:
        raise ModelValidationError(f"frequências de Rayleigh devem ser positivas: {modes}", field="rayleigh")
    if np.isclose(w1, w2, rtol=1e-12, atol=0.0):
        raise ModelValidationError(f"par de frequências degenerado: ω₁ = ω₂ = {w1}", field="rayleigh")
    if zeta < 0:
        raise ModelValidationError(f"zeta deve ser não negativo: {zeta}", field="rayleigh")
    a0, a1 = rayleigh_coefficients(zeta, w1, w2)
    return a0 * model.mass + a1 * model.stiffness


def rayleigh_coefficients(zeta: float, w1: float, w2: float) -> Tuple[float, float]:
    a0 = 2.0 * zeta * w1 * w2 / (w1 + w2)
    a1 = 2.0 * zeta / (w1 + w2)
    return a0, a1


def with_rayleigh(model: StructuralModel, zeta: float) -> StructuralModel:
    """Modelo com amortecimento inerente de Rayleigh nos dois primeiros modos"""
    if model.n_dof == 1:
        # SDOF: amortecimento proporcional à massa/rigidez equivalente c = 2ζωm
        w = np.sqrt(model.stiffness[0, 0] / model.mass[0, 0])
        return model.with_inherent_damping(2.0 * zeta * w * model.mass)
    (w1, _), (w2, _) = compute_lowest_modes(model, 2)
    return model.with_inherent_damping(build_rayleigh(model, zeta, (w1, w2)))


def modal_damping_ratios(model: StructuralModel, C: np.ndarray, modes) -> np.ndarray:
    """ζ_i = φᵢᵀCφᵢ / (2ωᵢ) para modos normalizados pela massa"""
    return np.array([(phi @ C @ phi) / (2.0 * w) for w, phi in modes])


def assemble_added_damping(
    model: StructuralModel,
    design: DesignVector,
    scenario: FailureScenario = NO_FAILURE,
) -> np.ndarray:
    """C_d = Σ_{i∉J} T_iᵀ c_d,i T_i + Σ_{j∈J} T_jᵀ ν c_d,j T_j"""
    if design.size != model.n_dampers:
        raise ValueError(f"projeto com {design.size} variáveis para {model.n_dampers} amortecedores")
    coeffs = design.damping() * scenario.retention(model.n_dampers)
    return np.tensordot(coeffs, model.damper_outer, axes=1)


def damping_sensitivity(
    model: StructuralModel,
    c_bar: float,
    scenario: FailureScenario,
    k: int,
) -> np.ndarray:
    """∂C_d/∂x_k = c̄·ν_k·T_kᵀT_k (zero se o amortecedor falhou completamente)"""
    return c_bar * scenario.factor_of(k) * model.damper_outer[k]


def build_shear_frame(
    masses: Sequence[float],
    stiffnesses: Sequence[float],
    d_allow: float | Sequence[float],
    damper_stories: Optional[Sequence[int]] = None,
    zeta: Optional[float] = None,
    name: str = "shear-frame",
) -> StructuralModel:
    """Pórtico plano de cisalhamento: 1 GDL por pavimento, drift j = u_j - u_{j-1}

    damper_stories usa índices 0-based de pavimento; um amortecedor axial por
    entrada (repetições permitidas). Com `zeta`, aplica Rayleigh nos dois
    primeiros modos.
    """
    m = np.asarray(masses, dtype=float)
    k = np.asarray(stiffnesses, dtype=float)
    n = m.size
    if k.size != n:
        raise ModelValidationError("uma rigidez por pavimento é necessária", field="stiffness")

    K = np.zeros((n, n))
    for j in range(n):
        K[j, j] += k[j]
        if j > 0:
            K[j - 1, j - 1] += k[j]
            K[j - 1, j] -= k[j]
            K[j, j - 1] -= k[j]

    H = np.eye(n)
    H[1:, :-1] -= np.eye(n - 1)

    stories = list(range(n)) if damper_stories is None else list(damper_stories)
    transforms = tuple(H[s:s + 1, :] for s in stories)
    labels = tuple(f"story{s + 1}" + (f"#{stories[:i].count(s) + 1}" if stories.count(s) > 1 else "")
                   for i, s in enumerate(stories))

    allow = np.broadcast_to(np.asarray(d_allow, dtype=float), (n,))
    model = StructuralModel(
        mass=np.diag(m),
        stiffness=K,
        influence=np.ones(n),
        drift_transform=H,
        d_allow=allow,
        damper_transforms=transforms,
        name=name,
        damper_labels=labels,
    )
    if zeta is not None:
        model = with_rayleigh(model, zeta)
    return model
