"""
Estratégia de working-set para o projeto fail-safe

Sequência de subproblemas relaxados: começa só com o cenário sem falha,
resolve por SLP, avalia todos os cenários e acrescenta os críticos até que
nenhum esteja violado; depois repete com os registros do conjunto que
ainda violam a restrição de drift.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import numpy as np
from pydantic import BaseModel, Field

from core.config import settings
from core.constraints import ConstraintParams
from core.dynamics import GroundMotion, select_dominant
from core.errors import WorkingSetError
from core.model import StructuralModel, compute_lowest_modes
from core.optimizer import CuttingPlane, EvaluationEngine, SlpConfig, SlpIteration, slp_solve
from core.scenarios import ScenarioSet

logger = logging.getLogger(__name__)

MODE_FAILSAFE = "failsafe"
MODE_FULLSET = "fullset"
MODE_BASIC = "basic"


class FailsafeConfig(BaseModel):
    """Parâmetros do laço externo (working-set e registros)"""

    slp: SlpConfig
    mode: str = Field(MODE_FAILSAFE, pattern="^(failsafe|fullset|basic)$")
    c_bar: float = Field(150000.0, gt=0)
    epsilon: float = Field(0.05, ge=0)
    zeta: float = Field(0.05, ge=0)
    violation_tol: float = Field(1e-3, ge=0)
    x0: float = Field(0.5, ge=0, le=1)
    max_subproblems: int = Field(50, ge=1)
    max_record_passes: int = Field(10, ge=1)
    max_workers: int = Field(1, ge=1)


@dataclass
class WorkingSetState:
    """Estado do algoritmo: S_WS ordenado, contador k e bookkeeping de violações"""

    working_set: List[int]
    x_current: np.ndarray
    epsilon: float
    k: int = 0
    violated: Set[int] = field(default_factory=set)
    candidates: Set[int] = field(default_factory=set)
    eval_counter: int = 0

    def expand(self, candidates: Set[int]):
        new = sorted(candidates - set(self.working_set))
        if not new:
            raise WorkingSetError("expansão sem cenários novos")
        self.working_set = self.working_set + new
        self.candidates = set(new)


@dataclass
class ScenarioEvaluation:
    """g_α (pior registro), g por registro e picos exatos"""

    scenario_ids: List[int]
    record_names: List[str]
    g_by_record: np.ndarray
    peaks: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return self.g_by_record.max(axis=1)

    @property
    def peak(self) -> np.ndarray:
        return self.peaks.max(axis=1)

    def violated(self, tol: float) -> Set[int]:
        return {sid for sid, g in zip(self.scenario_ids, self.g) if g > tol}

    def violated_records(self, tol: float) -> List[str]:
        return [name for j, name in enumerate(self.record_names) if np.any(self.g_by_record[:, j] > tol)]


@dataclass
class SubproblemRecord:
    k: int
    scenario_ids: List[int]
    records: List[str]
    iterations: int
    converged: bool
    cost: float
    max_g: float


@dataclass
class Certificate:
    """Verificação a posteriori sobre todos os cenários e todos os registros"""

    evaluation: ScenarioEvaluation
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.evaluation.g <= self.tol))

    @property
    def max_g(self) -> float:
        return float(self.evaluation.g.max())


@dataclass
class FinalDesign:
    x: np.ndarray
    c_bar: float
    mode: str
    subproblems: List[SubproblemRecord]
    working_set: List[int]
    active_records: List[str]
    dominant_record: str
    fundamental_period: float
    eval_counter: int
    wall_time: float
    converged: bool
    final_params: ConstraintParams
    certificate: Optional[Certificate] = None
    iteration_log: List[SlpIteration] = field(default_factory=list)
    n_planes: int = 0

    @property
    def cost(self) -> float:
        return float(self.x.sum())

    @property
    def damping(self) -> np.ndarray:
        return self.c_bar * self.x

    @property
    def total_damping(self) -> float:
        return float(self.damping.sum())

    def to_manifest(self, scenarios: Optional[ScenarioSet] = None) -> Dict:
        """Resumo serializável (JSON) da execução"""
        out = {
            "mode": self.mode,
            "converged": self.converged,
            "cost_J": self.cost,
            "total_damping_kNs_m": self.total_damping,
            "c_bar": self.c_bar,
            "x": [float(v) for v in self.x],
            "damping_kNs_m": [float(v) for v in self.damping],
            "subproblems": [
                {
                    "k": s.k,
                    "scenarios": s.scenario_ids,
                    "n_scenarios": len(s.scenario_ids),
                    "records": s.records,
                    "iterations": s.iterations,
                    "converged": s.converged,
                    "cost_J": s.cost,
                    "max_g": s.max_g,
                }
                for s in self.subproblems
            ],
            "working_set": self.working_set,
            "active_records": self.active_records,
            "dominant_record": self.dominant_record,
            "fundamental_period_s": self.fundamental_period,
            "eval_counter": self.eval_counter,
            "wall_time_s": self.wall_time,
            "final_p": self.final_params.p,
            "final_q": self.final_params.q,
            "n_planes": self.n_planes,
        }
        if scenarios is not None:
            out["working_set_labels"] = [scenarios.describe(i) for i in self.working_set]
            out["scenario_counts"] = {"n_c": scenarios.n_c, "n_p": scenarios.n_p, "N_FS": scenarios.n_fs}
        if self.certificate is not None:
            out["certificate"] = {"passed": self.certificate.passed, "max_g": self.certificate.max_g,
                                  "tol": self.certificate.tol}
        return out


def evaluate_all(
    x: np.ndarray,
    model: StructuralModel,
    scenarios: Sequence,
    records: Sequence[GroundMotion],
    params: ConstraintParams,
    engine: EvaluationEngine,
) -> ScenarioEvaluation:
    """Uma análise primal por par (cenário, registro); g_α é o pior entre os registros"""
    scenarios = list(scenarios)
    pairs = [(s, gm) for s in scenarios for gm in records]
    values = engine.values(x, pairs, params)
    n_r = len(records)
    g = np.array([v.g for v in values]).reshape(len(scenarios), n_r)
    peaks = np.array([v.d_max_exact for v in values]).reshape(len(scenarios), n_r)
    return ScenarioEvaluation(
        scenario_ids=[s.id for s in scenarios],
        record_names=[gm.name for gm in records],
        g_by_record=g,
        peaks=peaks,
    )


def select_critical(g: Sequence[float], working_set: Sequence[int], epsilon: float,
                    ids: Optional[Sequence[int]] = None) -> Set[int]:
    """T = {i ∉ S_WS : (g_max - g_i)/g_max ≤ ε}, com g_max sobre todos os cenários"""
    g = np.asarray(g, dtype=float)
    ids = list(range(g.size)) if ids is None else list(ids)
    g_max = float(g.max())
    if g_max <= 0:
        raise WorkingSetError(f"seleção de cenários críticos sem violação (g_max = {g_max:.4g})")
    in_ws = set(working_set)
    return {sid for sid, gi in zip(ids, g) if (g_max - gi) / g_max <= epsilon and sid not in in_ws}


def verify_design(
    x: np.ndarray,
    model: StructuralModel,
    scenarios: ScenarioSet,
    ensemble: Sequence[GroundMotion],
    params: ConstraintParams,
    tol: float,
    c_bar: float,
    max_workers: int = 1,
) -> Certificate:
    """Certificado final; não entra no contador de avaliações da otimização"""
    engine = EvaluationEngine(model, c_bar, max_workers)
    evaluation = evaluate_all(x, model, scenarios, ensemble, params, engine)
    cert = Certificate(evaluation=evaluation, tol=tol)
    status = "✅" if cert.passed else "❌"
    logger.info(f"{status} Verificação: max g = {cert.max_g:+.4e} sobre {len(scenarios)} cenários × {len(ensemble)} registros")
    return cert


def run_failsafe(
    model: StructuralModel,
    scenarios: ScenarioSet,
    ensemble: Sequence[GroundMotion],
    config: FailsafeConfig,
) -> FinalDesign:
    """Algoritmo de working-set com laço externo de seleção de registros"""
    if not ensemble:
        raise ValueError("conjunto de registros vazio")
    names = [gm.name for gm in ensemble]
    if len(set(names)) != len(names):
        raise ValueError(f"nomes de registros repetidos: {names}")

    start = time.perf_counter()
    if config.mode == MODE_BASIC:
        scenarios = ScenarioSet.no_failure_only(model.n_dampers)
    engine = EvaluationEngine(model, config.c_bar, config.max_workers)
    slp = config.slp
    if slp.delta is None:
        slp = SlpConfig(**{**slp.model_dump(), "n_dampers": model.n_dampers, "delta": None})
    continuation = slp.continuation()
    planes: List[CuttingPlane] = []

    # registro dominante pelo período fundamental da estrutura sem amortecedores
    (w1, _), = compute_lowest_modes(model, 1)
    period = 2.0 * np.pi / w1
    dominant = select_dominant(ensemble, period, config.zeta)
    active = [ensemble[dominant]]

    initial = list(scenarios.ids) if config.mode == MODE_FULLSET else [0]
    state = WorkingSetState(working_set=initial, x_current=np.full(model.n_dampers, config.x0),
                            epsilon=config.epsilon)
    subproblems: List[SubproblemRecord] = []
    iteration_log: List[SlpIteration] = []
    converged = False

    logger.info(f"🚀 Modo {config.mode}: {scenarios.n_fs} cenários, {len(ensemble)} registro(s), "
                f"T₁ = {period:.3f}s")
    for record_pass in range(config.max_record_passes):
        algorithm_done = False
        while len(subproblems) < config.max_subproblems:
            logger.info(f"📐 Subproblema {state.k}: S_WS = {[scenarios.describe(i) for i in state.working_set]}")
            res = slp_solve(model, scenarios.subset(state.working_set), active, state.x_current,
                            slp, engine=engine, continuation=continuation, planes=planes)
            state.x_current = res.x
            iteration_log.extend(res.iterations)

            ev = evaluate_all(state.x_current, model, scenarios, active, continuation.params(), engine)
            state.violated = ev.violated(config.violation_tol)
            subproblems.append(SubproblemRecord(
                k=state.k, scenario_ids=list(state.working_set), records=[gm.name for gm in active],
                iterations=res.n_iterations, converged=res.converged,
                cost=float(state.x_current.sum()), max_g=float(ev.g.max())))
            state.k += 1

            if not state.violated:
                algorithm_done = True
                break
            candidates = select_critical(ev.g, state.working_set, config.epsilon, ev.scenario_ids)
            if not candidates:
                candidates = state.violated - set(state.working_set)
            if not candidates:
                logger.warning("⚠️ Cenários violados já estão no working set; resolvendo o subproblema novamente")
                continue
            state.expand(candidates)
            logger.info(f"➕ Cenários adicionados: {[scenarios.describe(i) for i in sorted(candidates)]}")

        if not algorithm_done:
            logger.warning(f"⚠️ Limite de {config.max_subproblems} subproblemas atingido")
            break

        remaining = [gm for gm in ensemble if gm.name not in {r.name for r in active}]
        if not remaining:
            converged = True
            break
        ev = evaluate_all(state.x_current, model, scenarios, remaining, continuation.params(), engine)
        added = ev.violated_records(config.violation_tol)
        if not added:
            converged = True
            break
        active = active + [gm for gm in remaining if gm.name in added]
        logger.info(f"🌎 Registros adicionados: {added}")
    else:
        logger.warning(f"⚠️ Limite de {config.max_record_passes} passagens de registros atingido")

    state.eval_counter = engine.eval_counter
    final_params = continuation.params()
    design = FinalDesign(
        x=state.x_current,
        c_bar=config.c_bar,
        mode=config.mode,
        subproblems=subproblems,
        working_set=list(state.working_set),
        active_records=[gm.name for gm in active],
        dominant_record=ensemble[dominant].name,
        fundamental_period=float(period),
        eval_counter=state.eval_counter,
        wall_time=time.perf_counter() - start,
        converged=converged,
        final_params=final_params,
        iteration_log=iteration_log,
        n_planes=len(planes),
    )
    design.certificate = verify_design(design.x, model, scenarios, ensemble, final_params,
                                       config.violation_tol, config.c_bar, config.max_workers)
    logger.info(f"🏁 {config.mode}: J = {design.cost:.5f} ({design.total_damping:,.0f} kNs/m), "
                f"{len(subproblems)} subproblema(s), {design.eval_counter} avaliações, "
                f"{design.wall_time:.1f}s")
    return design


def failsafe_config_from_settings(mode: str = MODE_FAILSAFE, n_dampers: Optional[int] = None,
                                  slp_overrides: Optional[Dict] = None, **overrides) -> FailsafeConfig:
    s = settings
    slp = SlpConfig.from_settings(n_dampers, s, **(slp_overrides or {})) if n_dampers else \
        SlpConfig(**(slp_overrides or {}))
    values = dict(
        slp=slp, mode=mode, c_bar=s.c_bar, epsilon=s.epsilon, zeta=s.zeta,
        violation_tol=s.violation_tol, max_subproblems=s.max_subproblems,
        max_record_passes=s.max_record_passes, max_workers=s.max_workers,
    )
    values.update({k: v for k, v in overrides.items() if v is not None})
    return FailsafeConfig(**values)
