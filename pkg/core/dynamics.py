"""
Integração das equações de movimento (Newmark, aceleração média) e
espectros de deslocamento para seleção do registro dominante
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from core.config import settings
from core.errors import GroundMotionFormatError, SingularSystemError

logger = logging.getLogger(__name__)

SUPPORTED_BETAS = (1.0 / 4.0, 1.0 / 6.0)


@dataclass(frozen=True, eq=False)
class GroundMotion:
    """Registro de aceleração do solo amostrado uniformemente (m/s²)"""

    name: str
    dt: float
    accel: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        accel = np.array(self.accel, dtype=float).reshape(-1)
        if self.dt <= 0:
            raise GroundMotionFormatError(f"{self.name}: dt deve ser positivo (recebido {self.dt})")
        if accel.size < 2:
            raise GroundMotionFormatError(f"{self.name}: são necessárias ao menos 2 amostras")
        accel.setflags(write=False)
        object.__setattr__(self, "accel", accel)

    @property
    def values(self) -> np.ndarray:
        """Aceleração já multiplicada pelo fator de escala"""
        return self.scale * self.accel

    @property
    def n_steps(self) -> int:
        return self.accel.size - 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.accel.size)

    def scaled(self, factor: float) -> "GroundMotion":
        return GroundMotion(self.name, self.dt, self.accel, self.scale * factor)

    def pga(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True, eq=False)
class ResponseHistory:
    """Histórias discretas u, v, a [N+1 × n_dof] relativas ao solo"""

    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    dt: float
    u0: np.ndarray
    v0: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.u.shape[0] - 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.u.shape[0])

    def drifts(self, H: np.ndarray) -> np.ndarray:
        """Drifts entre pavimentos [N+1 × N_drifts]"""
        return self.u @ H.T


class NewmarkIntegrator:
    """Método de Newmark com fatoração única da rigidez efetiva"""

    def __init__(self, beta=0.25, gamma=0.5):
        if not any(np.isclose(beta, b) for b in SUPPORTED_BETAS) or not np.isclose(gamma, 0.5):
            raise ValueError(f"Newmark suportado apenas com β ∈ {{1/4, 1/6}}, γ = 1/2 (β={beta}, γ={gamma})")
        self.beta = beta
        self.gamma = gamma

    def constants(self, dt):
        beta, gamma = self.beta, self.gamma
        return {
            "a0": 1 / (beta * dt ** 2),
            "a1": gamma / (beta * dt),
            "a2": 1 / (beta * dt),
            "a3": 1 / (2 * beta) - 1,
            "a4": gamma / beta - 1,
            "a5": dt / 2 * (gamma / beta - 2),
            "a6": dt * (1 - gamma),
            "a7": gamma * dt,
        }

    def solve(self, M, C, K, force, dt, u0=None, v0=None) -> ResponseHistory:
        """Integra M a + C v + K u = f_i para i = 0..N (força [N+1 × n])"""
        n_rows, n = force.shape
        u = np.zeros((n_rows, n))
        v = np.zeros((n_rows, n))
        a = np.zeros((n_rows, n))
        u[0] = 0.0 if u0 is None else u0
        v[0] = 0.0 if v0 is None else v0

        try:
            m_factor = linalg.cho_factor(M)
        except linalg.LinAlgError:
            raise SingularSystemError("matriz de massa singular") from None
        a[0] = linalg.cho_solve(m_factor, force[0] - C @ v[0] - K @ u[0])

        c = self.constants(dt)
        K_eff = K + c["a0"] * M + c["a1"] * C
        solve = _factorize(K_eff, "rigidez efetiva")

        for i in range(n_rows - 1):
            rhs = (force[i + 1]
                   + M @ (c["a0"] * u[i] + c["a2"] * v[i] + c["a3"] * a[i])
                   + C @ (c["a1"] * u[i] + c["a4"] * v[i] + c["a5"] * a[i]))
            u[i + 1] = solve(rhs)
            a[i + 1] = c["a0"] * (u[i + 1] - u[i]) - c["a2"] * v[i] - c["a3"] * a[i]
            v[i + 1] = v[i] + c["a6"] * a[i] + c["a7"] * a[i + 1]

        return ResponseHistory(u=u, v=v, a=a, dt=dt, u0=u[0].copy(), v0=v[0].copy())


def _factorize(A: np.ndarray, what: str):
    """Fatoração simétrica (Cholesky) com LU como alternativa; devolve o solver"""
    if np.allclose(A, A.T, rtol=1e-12, atol=0.0):
        try:
            factor = linalg.cho_factor(A)
            return lambda b: linalg.cho_solve(factor, b)
        except linalg.LinAlgError:
            pass
    lu, piv = linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * max(diag.max(), 1.0) * A.shape[0]:
        raise SingularSystemError(f"matriz de {what} singular")
    return lambda b: linalg.lu_solve((lu, piv), b)


def newmark_solve(
    model,
    C_d: np.ndarray,
    gm: GroundMotion,
    beta: float = 0.25,
    gamma: float = 0.5,
    u0: Optional[np.ndarray] = None,
    v0: Optional[np.ndarray] = None,
) -> ResponseHistory:
    """Resposta do modelo com amortecimento C_s + C_d ao registro gm (passo do registro)"""
    M, K = model.mass, model.stiffness
    C = model.inherent_damping + C_d
    force = -np.outer(gm.values, M @ model.influence)
    return NewmarkIntegrator(beta, gamma).solve(M, C, K, force, gm.dt, u0=u0, v0=v0)


def equilibrium_residuals(model, C_d, gm: GroundMotion, history: ResponseHistory) -> np.ndarray:
    """‖M a + C v + K u + M e a_g‖ / ‖M e a_g‖ por passo (diagnóstico)"""
    M = model.mass
    C = model.inherent_damping + C_d
    load = np.outer(gm.values, M @ model.influence)
    res = history.a @ M.T + history.v @ C.T + history.u @ model.stiffness.T + load
    scale = np.maximum(np.linalg.norm(load, axis=1), np.finfo(float).tiny)
    return np.linalg.norm(res, axis=1) / scale.max()


def _sdof_history(gm: GroundMotion, period: float, zeta: float) -> ResponseHistory:
    w = 2.0 * np.pi / period
    M = np.array([[1.0]])
    K = np.array([[w * w]])
    C = np.array([[2.0 * zeta * w]])
    force = -gm.values.reshape(-1, 1)
    return NewmarkIntegrator().solve(M, C, K, force, gm.dt)


def spectral_displacement(gm: GroundMotion, period: float, zeta: float = 0.05) -> float:
    """Deslocamento máximo de um oscilador de massa unitária com período `period`"""
    if period <= 0:
        raise ValueError("período deve ser positivo")
    return float(np.abs(_sdof_history(gm, period, zeta).u).max())


def response_spectrum(gm: GroundMotion, periods: Sequence[float], zeta: float = 0.05) -> np.ndarray:
    return np.array([spectral_displacement(gm, T, zeta) for T in periods])


def select_dominant(ensemble: Sequence[GroundMotion], period: float, zeta: float = 0.05) -> int:
    """Índice do registro com maior deslocamento espectral no período dado"""
    if not ensemble:
        raise ValueError("conjunto de registros vazio")
    sd = [spectral_displacement(gm, period, zeta) for gm in ensemble]
    best = int(np.argmax(sd))
    for gm, value in zip(ensemble, sd):
        logger.debug(f"Sd({gm.name}, T={period:.3f}s) = {value:.4g} m")
    logger.info(f"🎯 Registro dominante: {ensemble[best].name} (Sd={sd[best]:.4g} m, T={period:.3f}s)")
    return best


# Leitura / escrita de registros

_DT_HEADER = re.compile(r"^\s*dt\s*=\s*([0-9.eE+-]+)\s*$", re.IGNORECASE)
_PEER_HEADER = re.compile(r"NPTS\s*=\s*(\d+)\s*,\s*DT\s*=\s*([0-9.eE+-]+)", re.IGNORECASE)


def _unit_factor(units: str, g_accel: float) -> float:
    units = units.lower().replace("/", "").replace("^", "")
    if units in ("ms2", "m/s2"):
        return 1.0
    if units == "g":
        return g_accel
    raise GroundMotionFormatError(f"unidade de aceleração desconhecida: {units} (use g ou m/s2)")


def read_ground_motion(
    path,
    units: str = "m/s2",
    name: Optional[str] = None,
    g_accel: Optional[float] = None,
) -> GroundMotion:
    """Lê registro em duas colunas (t, a), cabeçalho `dt=` ou formato PEER NGA (.AT2)

    Arquivos .AT2 estão sempre em g.
    """
    path = Path(path)
    g_accel = g_accel or settings.g_accel
    name = name or path.stem
    if not path.exists():
        raise GroundMotionFormatError(f"registro não encontrado: {path}")
    lines = path.read_text().splitlines()

    if path.suffix.lower() == ".at2" or any(_PEER_HEADER.search(l) for l in lines[:6]):
        dt, accel = _parse_peer(lines, path)
        return GroundMotion(name=name, dt=dt, accel=accel * g_accel)

    factor = _unit_factor(units, g_accel)
    body = [(no, l.split("#", 1)[0].strip()) for no, l in enumerate(lines, 1)]
    body = [(no, l) for no, l in body if l]
    if not body:
        raise GroundMotionFormatError(f"{path}: arquivo vazio")

    match = _DT_HEADER.match(body[0][1])
    if match:
        dt = float(match.group(1))
        values = []
        for no, l in body[1:]:
            try:
                values.append(float(l.replace(",", " ").split()[0]))
            except ValueError:
                raise GroundMotionFormatError(f"{path}:{no}: valor inválido '{l}'") from None
        return GroundMotion(name=name, dt=dt, accel=np.array(values) * factor)

    rows = []
    for no, l in body:
        parts = l.replace(",", " ").split()
        if len(parts) != 2:
            raise GroundMotionFormatError(f"{path}:{no}: esperado 'tempo aceleração', recebido '{l}'")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise GroundMotionFormatError(f"{path}:{no}: valor inválido '{l}'") from None
    data = np.array(rows)
    steps = np.diff(data[:, 0])
    if steps.size == 0 or np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
        raise GroundMotionFormatError(f"{path}: amostragem no tempo não uniforme")
    return GroundMotion(name=name, dt=float(steps.mean()), accel=data[:, 1] * factor)


def _parse_peer(lines, path) -> Tuple[float, np.ndarray]:
    for idx, line in enumerate(lines[:6]):
        match = _PEER_HEADER.search(line)
        if match:
            npts, dt = int(match.group(1)), float(match.group(2))
            values = np.array([float(p) for l in lines[idx + 1:] for p in l.split()])
            if values.size != npts:
                raise GroundMotionFormatError(f"{path}: NPTS={npts} mas {values.size} amostras lidas")
            return dt, values
    raise GroundMotionFormatError(f"{path}: cabeçalho 'NPTS=..., DT=...' não encontrado")


def write_ground_motion(path, gm: GroundMotion):
    """Escreve no formato `dt=` (uma aceleração por linha, m/s²)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(f"# {gm.name}\n")
        f.write(f"dt={gm.dt!r}\n")
        for value in gm.values:
            f.write(f"{float(value)!r}\n")


def synthetic_ground_motion(
    duration: float = 20.0,
    dt: float = 0.01,
    pga: float = 3.0,
    seed: int = 0,
    band: Tuple[float, float] = (0.5, 8.0),
    name: Optional[str] = None,
) -> GroundMotion:
    """Registro sintético: soma de harmônicos com fases aleatórias e envoltória trapezoidal-exponencial"""
    rng = np.random.default_rng(seed)
    t = np.arange(0.0, duration + 0.5 * dt, dt)
    freqs = np.linspace(band[0], band[1], 60)
    amps = 1.0 / np.sqrt(freqs)
    phases = rng.uniform(0.0, 2.0 * np.pi, freqs.size)
    signal = (amps[:, None] * np.sin(2.0 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])).sum(axis=0)

    t_rise, t_strong = 0.1 * duration, 0.5 * duration
    envelope = np.where(t < t_rise, (t / t_rise) ** 2,
                        np.where(t < t_strong, 1.0, np.exp(-3.0 * (t - t_strong) / (duration - t_strong))))
    accel = signal * envelope
    accel *= pga / np.abs(accel).max()
    return GroundMotion(name=name or f"synthetic-{seed}", dt=dt, accel=accel)
