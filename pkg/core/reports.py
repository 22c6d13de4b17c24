"""
Relatórios em CSV/texto: tabela de coeficientes, restrições por cenário,
histórias de drift, log de iterações e manifesto da execução
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from core.constraints import ConstraintParams, normalized_drifts
from core.dynamics import GroundMotion, newmark_solve
from core.failsafe import FinalDesign, ScenarioEvaluation, evaluate_all
from core.model import DesignVector, StructuralModel, assemble_added_damping
from core.optimizer import EvaluationEngine
from core.scenarios import ScenarioSet

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"

MODE_COLUMNS = {
    "basic": "Basic",
    "failsafe": "Fail-safe(WS)",
    "fullset": "Fail-safe(Full)",
}


def _write(frame: pd.DataFrame, out_dir: Optional[Path], stem: str, index: bool = False):
    if out_dir is None:
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_dir / f"{stem}.csv", index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    (out_dir / f"{stem}.txt").write_text(frame.to_string(index=index) + "\n")


def report_design(
    final: FinalDesign,
    model: StructuralModel,
    comparison: Optional[Dict[str, FinalDesign]] = None,
    out_dir: Optional[Path] = None,
) -> pd.DataFrame:
    """Coeficientes por posição (kNs/m) lado a lado; J nas últimas linhas

    `J [kNs/m]` é Σc_d,i e `J [Σx]` é a soma das variáveis normalizadas.
    """
    designs = dict(comparison or {})
    designs[final.mode] = final
    order = [m for m in ("basic", "failsafe", "fullset") if m in designs]

    rows = {"Location": list(model.damper_labels) + ["J [kNs/m]", "J [Σx]"]}
    for mode in order:
        d = designs[mode]
        rows[MODE_COLUMNS.get(mode, mode)] = list(np.round(d.damping, 0)) + [
            round(d.total_damping, 0), d.cost]
    frame = pd.DataFrame(rows)
    _write(frame, out_dir, "design")
    return frame


def report_evaluations(designs: Dict[str, FinalDesign], out_dir: Optional[Path] = None) -> pd.DataFrame:
    """Subproblemas, cenários por subproblema e avaliações por modo (tempo só no manifesto)"""
    records = []
    for mode, d in designs.items():
        records.append({
            "mode": MODE_COLUMNS.get(mode, mode),
            "subproblems": len(d.subproblems),
            "scenarios_per_subproblem": " ".join(str(len(s.scenario_ids)) for s in d.subproblems),
            "iterations": " ".join(str(s.iterations) for s in d.subproblems),
            "eval_counter": d.eval_counter,
            "J [Σx]": d.cost,
            "converged": d.converged,
        })
    frame = pd.DataFrame(records)
    _write(frame, out_dir, "evaluations")
    return frame


def basic_fraction(basic: FinalDesign, failsafe: FinalDesign) -> float:
    """Amortecimento total do projeto básico como fração do fail-safe"""
    if failsafe.total_damping == 0:
        return float("nan")
    return basic.total_damping / failsafe.total_damping


def constraint_frame(evaluation: ScenarioEvaluation, scenarios: ScenarioSet) -> pd.DataFrame:
    rows = []
    for i, sid in enumerate(evaluation.scenario_ids):
        for j, name in enumerate(evaluation.record_names):
            rows.append({
                "scenario": sid,
                "label": scenarios.describe(sid),
                "record": name,
                "g": evaluation.g_by_record[i, j],
                "peak": evaluation.peaks[i, j],
                "threshold": 1.0,
            })
    return pd.DataFrame(rows)


def drift_history_frame(history, model: StructuralModel) -> pd.DataFrame:
    """Drifts normalizados por d_allow ao longo do tempo"""
    r = normalized_drifts(history, model)
    frame = pd.DataFrame(r, columns=[f"drift{j + 1}" for j in range(r.shape[1])])
    frame.insert(0, "time", history.times())
    return frame


def report_constraints(
    x: np.ndarray,
    model: StructuralModel,
    scenarios: ScenarioSet,
    records: Sequence[GroundMotion],
    params: ConstraintParams,
    c_bar: float,
    out_dir: Optional[Path] = None,
    tag: str = "",
    max_workers: int = 1,
) -> pd.DataFrame:
    """g_α e picos exatos por cenário e registro + histórias de drift

    Exporta histórias para o cenário sem falha e para o pior cenário de cada registro.
    """
    engine = EvaluationEngine(model, c_bar, max_workers)
    evaluation = evaluate_all(x, model, scenarios, records, params, engine)
    frame = constraint_frame(evaluation, scenarios)
    suffix = f"_{tag}" if tag else ""
    _write(frame, out_dir, f"constraints{suffix}")

    if out_dir is not None:
        design = DesignVector(x, c_bar)
        for j, gm in enumerate(records):
            worst = evaluation.scenario_ids[int(np.argmax(evaluation.g_by_record[:, j]))]
            for sid in sorted({0, worst}):
                C_d = assemble_added_damping(model, design, scenarios[sid])
                history = newmark_solve(model, C_d, gm)
                drift_history_frame(history, model).to_csv(
                    Path(out_dir) / f"drifts{suffix}_{gm.name}_s{sid}.csv",
                    index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return frame


def report_iterations(final: FinalDesign, out_dir: Optional[Path] = None, tag: str = "") -> pd.DataFrame:
    frame = pd.DataFrame([
        {"iteration": k + 1, "slp_iteration": it.iteration, "cost": it.cost, "max_g": it.max_g,
         "dx": it.dx, "active_planes": it.active_planes, "p": it.p, "q": it.q, "lp_status": it.lp_status}
        for k, it in enumerate(final.iteration_log)
    ])
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        suffix = f"_{tag}" if tag else ""
        frame.to_csv(Path(out_dir) / f"iterations{suffix}.csv", index=False,
                     float_format=FLOAT_FORMAT, lineterminator="\n")
    return frame


def write_manifest(final: FinalDesign, scenarios: ScenarioSet, path, extra: Optional[Dict] = None):
    """Manifesto JSON da execução (dados da tabela de avaliações)"""
    data = final.to_manifest(scenarios)
    data["scenarios"] = scenarios.to_records()
    if extra:
        data.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info(f"💾 Manifesto salvo em {path}")
