"""
SLP modificado (planos de corte acumulados, limites de movimento,
desativação de restrições indesejadas e continuação p-q) para um
subproblema do working-set
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from core.adjoint import Sensitivity, constraint_and_gradient
from core.config import Settings, settings as default_settings
from core.constraints import ConstraintParams, ConstraintValue, ContinuationSchedule, evaluate
from core.dynamics import GroundMotion, newmark_solve
from core.errors import InfeasibleLPError
from core.model import DesignVector, StructuralModel, assemble_added_damping
from core.scenarios import FailureScenario
from core.simplex import STATUS_ELASTIC, LPResult, solve_bounded_lp, solve_elastic

logger = logging.getLogger(__name__)


class SlpConfig(BaseModel):
    """Parâmetros do SLP; delta = 0.10·ml·√N_d quando não informado"""

    ml: float = Field(0.02, gt=0, le=1)
    n_dampers: Optional[int] = Field(None, ge=1)
    delta: Optional[float] = Field(None, gt=0)
    i_min: int = Field(50, ge=0)
    i_max: int = Field(400, ge=1)
    drop_margin: float = Field(0.02, ge=0)
    max_planes_per_pair: int = Field(20, ge=1)
    bind_tol: float = Field(1e-6, ge=0)
    violation_tol: float = Field(1e-3, ge=0)
    p_start: int = 100
    p_step: int = 500
    p_cap: int = 1_000_000
    q_start: int = 100
    q_step: int = 500
    q_cap: int = 1_000_000

    @model_validator(mode="after")
    def _check(self):
        if self.delta is None and self.n_dampers is not None:
            self.delta = 0.10 * self.ml * math.sqrt(self.n_dampers)
        if self.i_max < self.i_min:
            raise ValueError("i_max deve ser >= i_min")
        if self.p_step < 0 or self.q_step < 0 or self.p_cap < self.p_start or self.q_cap < self.q_start:
            raise ValueError("cronograma de p/q deve ser monotônico não decrescente")
        if self.p_start % 2 or self.p_step % 2 or self.p_cap % 2:
            raise ValueError("p deve permanecer par ao longo da continuação")
        return self

    @classmethod
    def from_settings(cls, n_dampers: int, config: Optional[Settings] = None, **overrides) -> "SlpConfig":
        s = config or default_settings
        values = dict(
            ml=s.ml, n_dampers=n_dampers, i_min=s.i_min, i_max=s.i_max,
            drop_margin=s.drop_margin, max_planes_per_pair=s.max_planes_per_pair,
            violation_tol=s.violation_tol,
            p_start=s.p_start, p_step=s.p_step, p_cap=s.p_cap,
            q_start=s.q_start, q_step=s.q_step, q_cap=s.q_cap,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def continuation(self) -> ContinuationSchedule:
        return ContinuationSchedule(
            p_start=self.p_start, p_step=self.p_step, p_cap=self.p_cap,
            q_start=self.q_start, q_step=self.q_step, q_cap=self.q_cap,
        )


@dataclass(eq=False)
class CuttingPlane:
    """Linearização ĝ(x') = g + ∇gᵀ(x' - x) de um par (cenário, registro)"""

    scenario_id: int
    record: str
    gradient: np.ndarray
    intercept: float
    point: np.ndarray
    born: int
    p: int
    q: int
    active: bool = True
    disabled_at: Optional[int] = None

    def predict(self, x: np.ndarray) -> float:
        return float(self.intercept + self.gradient @ (np.asarray(x) - self.point))

    def row(self) -> Tuple[np.ndarray, float]:
        """Semiespaço ∇gᵀx' ≤ ∇gᵀx - g"""
        return self.gradient, float(self.gradient @ self.point - self.intercept)


class EvaluationEngine:
    """Executa análises primal/adjunta por par (cenário, registro) e conta avaliações

    Cada análise no tempo (primal ou adjunta) soma 1 ao contador.
    """

    def __init__(self, model: StructuralModel, c_bar: float, max_workers: int = 1):
        self.model = model
        self.c_bar = c_bar
        self.max_workers = max(1, int(max_workers))
        self.eval_counter = 0
        self._lock = threading.Lock()

    def _count(self, n: int):
        with self._lock:
            self.eval_counter += n

    def _map(self, fn, items):
        if self.max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(fn, items))

    def design(self, x) -> DesignVector:
        return DesignVector(x, self.c_bar)

    def sensitivities(
        self,
        x: np.ndarray,
        pairs: Sequence[Tuple[FailureScenario, GroundMotion]],
        params: ConstraintParams,
    ) -> List[Sensitivity]:
        design = self.design(x)

        def run(pair):
            scenario, gm = pair
            return constraint_and_gradient(self.model, design, scenario, gm, params)

        out = self._map(run, list(pairs))
        self._count(2 * len(out))
        return out

    def values(
        self,
        x: np.ndarray,
        pairs: Sequence[Tuple[FailureScenario, GroundMotion]],
        params: ConstraintParams,
    ) -> List[ConstraintValue]:
        design = self.design(x)

        def run(pair):
            scenario, gm = pair
            C_d = assemble_added_damping(self.model, design, scenario)
            return evaluate(newmark_solve(self.model, C_d, gm), self.model, params)

        out = self._map(run, list(pairs))
        self._count(len(out))
        return out


def solve_lp(
    objective: np.ndarray,
    planes: Sequence[CuttingPlane],
    box: Tuple[np.ndarray, np.ndarray],
    center: np.ndarray,
    ml: float,
) -> LPResult:
    """LP linearizado dentro dos limites de movimento; modo elástico se inviável"""
    center = np.asarray(center, dtype=float)
    lower = np.maximum(np.asarray(box[0], dtype=float), center - ml)
    upper = np.minimum(np.asarray(box[1], dtype=float), center + ml)
    enabled = [p for p in planes if p.active]
    if enabled:
        rows = [p.row() for p in enabled]
        A = np.vstack([r[0] for r in rows])
        b = np.array([r[1] for r in rows])
    else:
        A = np.zeros((0, center.size))
        b = np.zeros(0)
    try:
        return solve_bounded_lp(objective, A, b, lower, upper)
    except InfeasibleLPError:
        return solve_elastic(objective, A, b, lower, upper)


def retire_planes(
    planes: Sequence[CuttingPlane],
    current: ConstraintParams,
    at_cap: bool,
    per_pair: int,
    iteration: int,
) -> int:
    """Desativa planos que o LP não precisa mais e retorna quantos saíram

    Com a continuação no teto, planos de (p, q) anteriores são descartados.
    Em cada par (cenário, registro) ficam no máximo `per_pair` planos ativos,
    sempre os mais recentes.
    """
    kept = {}
    retired = 0
    for plane in reversed(planes):
        if not plane.active:
            continue
        key = (plane.scenario_id, plane.record)
        stale = at_cap and (plane.p, plane.q) != (current.p, current.q)
        if stale or kept.get(key, 0) >= per_pair:
            plane.active = False
            plane.disabled_at = iteration
            retired += 1
        else:
            kept[key] = kept.get(key, 0) + 1
    return retired


@dataclass
class SlpIteration:
    iteration: int
    cost: float
    max_g: float
    dx: float
    active_planes: int
    p: int
    q: int
    lp_status: str


@dataclass
class SlpResult:
    x: np.ndarray
    converged: bool
    feasible: bool
    iterations: List[SlpIteration] = field(default_factory=list)
    elastic_steps: int = 0
    max_g: Optional[float] = None    # g verdadeiro no x retornado

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def slp_solve(
    model: StructuralModel,
    scenarios: Sequence[FailureScenario],
    records: Sequence[GroundMotion],
    x0: np.ndarray,
    config: SlpConfig,
    engine: Optional[EvaluationEngine] = None,
    continuation: Optional[ContinuationSchedule] = None,
    planes: Optional[List[CuttingPlane]] = None,
    c_bar: Optional[float] = None,
) -> SlpResult:
    """Resolve um subproblema P_WS^k; `planes` e `continuation` são compartilhados entre subproblemas"""
    if not scenarios:
        raise ValueError("working set vazio: inclua ao menos o cenário sem falha")
    if not records:
        raise ValueError("nenhum registro ativo")
    n_d = model.n_dampers
    if config.delta is None:
        config = config.model_copy(update={"n_dampers": n_d, "delta": 0.10 * config.ml * math.sqrt(n_d)})
    engine = engine or EvaluationEngine(model, c_bar or default_settings.c_bar)
    continuation = continuation or config.continuation()
    planes = planes if planes is not None else []

    pairs = [(s, gm) for s in scenarios for gm in records]
    objective = np.ones(n_d)
    box = (np.zeros(n_d), np.ones(n_d))
    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    result = SlpResult(x=x, converged=False, feasible=False)
    best: Optional[Tuple[float, np.ndarray, float]] = None

    logger.info(f"🔄 SLP com {len(scenarios)} cenário(s) × {len(records)} registro(s), δ={config.delta:.4g}")
    for it in range(1, config.i_max + 1):
        params = continuation.params()
        sens = engine.sensitivities(x, pairs, params)
        true_g = {(s.id, gm.name): out.g for (s, gm), out in zip(pairs, sens)}
        max_g = max(true_g.values())

        if max_g <= config.violation_tol and (best is None or x.sum() < best[0]):
            best = (float(x.sum()), x.copy(), max_g)

        # planos indesejados: ativos no iterado atual com a restrição real folgada
        for plane in planes:
            if not plane.active:
                continue
            g_now = true_g.get((plane.scenario_id, plane.record))
            if g_now is None:
                continue
            if plane.predict(x) >= -config.bind_tol and g_now < -config.drop_margin:
                plane.active = False
                plane.disabled_at = it
                logger.debug(
                    f"Plano desativado: cenário {plane.scenario_id}/{plane.record} "
                    f"(nascido em {plane.born}), g real = {g_now:.4g}")

        for (scenario, gm), out in zip(pairs, sens):
            planes.append(CuttingPlane(
                scenario_id=scenario.id, record=gm.name, gradient=out.gradient,
                intercept=out.g, point=x.copy(), born=it, p=params.p, q=params.q))
        retired = retire_planes(planes, params, continuation.at_cap, config.max_planes_per_pair, it)
        if retired:
            logger.debug(f"{retired} plano(s) antigo(s) retirado(s) do LP")

        continuation.advance()

        lp = solve_lp(objective, planes, box, x, config.ml)
        if lp.status == STATUS_ELASTIC:
            result.elastic_steps += 1
        x_next = np.clip(lp.x, 0.0, 1.0)
        dx = float(np.linalg.norm(x_next - x))
        n_active = sum(p.active for p in planes)
        result.iterations.append(SlpIteration(
            iteration=it, cost=float(x.sum()), max_g=max_g, dx=dx,
            active_planes=n_active, p=params.p, q=params.q, lp_status=lp.status))
        logger.info(
            f"   it {it:4d}  J={x.sum():.5f}  max g={max_g:+.4e}  |Δx|={dx:.3e}  "
            f"planos={n_active}  p={params.p} q={params.q}")
        x = x_next

        if it >= config.i_min and dx < config.delta:
            result.converged = True
            break

    if result.converged:
        final = engine.values(x, pairs, continuation.params())
        result.x = x
        result.max_g = max(v.g for v in final)
        result.feasible = result.max_g <= config.violation_tol
        logger.info(
            f"✅ SLP convergiu em {result.n_iterations} iterações "
            f"(J={x.sum():.5f}, max g={result.max_g:+.4e})")
    elif best is not None:
        result.x = best[1]
        result.max_g = best[2]
        result.feasible = True
        logger.warning(f"⚠️ SLP atingiu i_max={config.i_max}; retornando melhor projeto viável (J={best[0]:.5f})")
    else:
        result.x = x
        logger.warning(f"⚠️ SLP atingiu i_max={config.i_max} sem projeto viável")
    return result
