"""
Interface de linha de comando do otimizador fail-safe

Lê o modelo e os registros sísmicos, monta a configuração da execução
(Settings + preset TOML + flags), executa o modo pedido e grava os
relatórios em CSV/texto. Códigos de saída: 0 sucesso, 2 erro de entrada,
3 não convergência.
"""

import argparse
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.adjoint import check_gradients
from core.config import settings
from core.constraints import ConstraintParams
from core.dynamics import GroundMotion, read_ground_motion
from core.errors import EXIT_INPUT_ERROR, EXIT_OK, ConfigurationError, FailsafeError, NonConvergenceError
from core.failsafe import (
    MODE_BASIC,
    MODE_FAILSAFE,
    MODE_FULLSET,
    FinalDesign,
    failsafe_config_from_settings,
    run_failsafe,
)
from core.logging_setup import configure_logging
from core.model import DesignVector, StructuralModel
from core.model_io import parse_model
from core.reports import (
    FLOAT_FORMAT,
    basic_fraction,
    report_constraints,
    report_design,
    report_evaluations,
    report_iterations,
    write_manifest,
)
from core.scenarios import ScenarioSet, enumerate_scenarios

logger = logging.getLogger(__name__)

MODE_COMPARE = "compare"
MODE_CHECK_GRADIENTS = "check-gradients"
MODE_SIMULATE = "simulate"
MODES = (MODE_FAILSAFE, MODE_BASIC, MODE_FULLSET, MODE_COMPARE, MODE_CHECK_GRADIENTS, MODE_SIMULATE)

# flags que viram sobrescritas do SlpConfig
SLP_FLAGS = ("ml", "i_min", "i_max", "p_start", "p_step", "p_cap", "q_start", "q_step", "q_cap")


class RunConfig(BaseModel):
    """Configuração completa de uma execução da CLI"""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_path: Path
    record_paths: List[Path] = Field(..., min_length=1)
    mode: Literal["failsafe", "basic", "fullset", "compare", "check-gradients", "simulate"] = MODE_FAILSAFE
    complete_k: Optional[int] = Field(None, ge=0)
    partial_k: Optional[int] = Field(None, ge=0)
    nu: float = Field(0.5, gt=0, lt=1)
    c_bar: float = Field(default_factory=lambda: settings.c_bar, gt=0)
    epsilon: Optional[float] = Field(None, ge=0)
    accel_units: Literal["g", "m/s2"] = "m/s2"
    out_dir: Path = Field(default_factory=lambda: settings.output_dir)
    tag: str = ""
    workers: int = Field(default_factory=lambda: settings.max_workers, ge=1)
    deterministic: bool = False
    x_value: Optional[float] = Field(None, ge=0, le=1)
    slp_overrides: Dict[str, Any] = Field(default_factory=dict)

    @property
    def run_dir(self) -> Path:
        return self.out_dir / self.tag if self.tag else self.out_dir

    @property
    def max_workers(self) -> int:
        # ordem de agregação fixa: um único worker
        return 1 if self.deterministic else self.workers

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        mode = MODE_CHECK_GRADIENTS if args.check_gradients else args.mode
        values = dict(
            model_path=args.model,
            record_paths=args.records or [],
            mode=mode,
            complete_k=args.complete_k,
            partial_k=args.partial_k,
            nu=args.nu,
            c_bar=args.cbar,
            epsilon=args.epsilon,
            accel_units=args.accel_units,
            out_dir=args.out,
            tag=args.tag or "",
            workers=args.workers,
            deterministic=args.deterministic,
            x_value=args.x,
            slp_overrides={k: getattr(args, k) for k in SLP_FLAGS if getattr(args, k) is not None},
        )
        return cls(**{k: v for k, v in values.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_failsafe.py",
        description="Distribuição fail-safe de custo mínimo de amortecedores viscosos lineares",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
EXEMPLOS DE USO:

  # Projeto fail-safe (falhas completas simples + falhas parciais em pares)
  python run_failsafe.py --model data/frame.json --records data/records/*.txt \\
      --complete-k 1 --partial-k 2 --nu 0.5

  # Comparação básico x fail-safe (working set) x fail-safe (conjunto completo)
  python run_failsafe.py --preset config/reference.toml --mode compare

  # Verificação do gradiente adjunto contra diferenças finitas
  python run_failsafe.py --model data/frame.json --records data/records/rec1.txt --check-gradients

  # Simulação única (sem otimização) com x = 0.3 em todos os amortecedores
  python run_failsafe.py --model data/frame.json --records data/records/rec1.txt --mode simulate --x 0.3
        """,
    )
    parser.add_argument("--preset", help="Arquivo TOML com valores padrão das flags")
    parser.add_argument("--model", help="Arquivo JSON do modelo estrutural")
    parser.add_argument("--records", nargs="+", help="Registros sísmicos (duas colunas, dt= ou .AT2)")
    parser.add_argument("--mode", choices=MODES, default=MODE_FAILSAFE,
                        help="Modo de execução (padrão: failsafe)")
    parser.add_argument("--complete-k", type=int, help="Tamanho dos subconjuntos com falha completa")
    parser.add_argument("--partial-k", type=int, help="Tamanho dos subconjuntos com falha parcial")
    parser.add_argument("--nu", type=float, help="Fração retida na falha parcial (padrão: 0.5)")
    parser.add_argument("--cbar", type=float, help=f"Coeficiente máximo c̄ em kNs/m (padrão: {settings.c_bar:g})")
    parser.add_argument("--ml", type=float, help=f"Limite de movimento (padrão: {settings.ml:g})")
    parser.add_argument("--imin", dest="i_min", type=int, help="Iterações mínimas do SLP")
    parser.add_argument("--imax", dest="i_max", type=int, help="Iterações máximas do SLP")
    parser.add_argument("--epsilon", type=float, help=f"Tolerância de seleção ε (padrão: {settings.epsilon:g})")
    for name in ("p", "q"):
        parser.add_argument(f"--{name}-start", type=int, help=f"Valor inicial de {name}")
        parser.add_argument(f"--{name}-step", type=int, help=f"Incremento de {name} por iteração")
        parser.add_argument(f"--{name}-cap", type=int, help=f"Valor máximo de {name}")
    parser.add_argument("--accel-units", choices=("g", "m/s2"), help="Unidade das acelerações (padrão: m/s2)")
    parser.add_argument("--out", help=f"Diretório de saída (padrão: {settings.output_dir})")
    parser.add_argument("--tag", help="Subdiretório de saída para esta execução")
    parser.add_argument("--workers", type=int, help="Threads para as análises (cenário × registro)")
    parser.add_argument("--deterministic", action="store_true",
                        help="Força um único worker")
    parser.add_argument("--x", type=float,
                        help="Projeto uniforme para simulate/check-gradients (padrão: 0 e 0.5)")
    parser.add_argument("--check-gradients", action="store_true",
                        help="Compara gradiente adjunto com diferenças finitas e sai")
    parser.add_argument("--log-level", default=None, help="Nível de log (DEBUG, INFO, ...)")
    return parser


def load_preset(path) -> Dict[str, Any]:
    """Lê o preset TOML; chaves usam os nomes das flags com '_' no lugar de '-'"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"preset não encontrado: {path}")
    with open(path, "rb") as f:
        data = tomllib.load(f)
    aliases = {"imin": "i_min", "imax": "i_max"}
    return {aliases.get(k, k).replace("-", "_"): v for k, v in data.items()}


def parse_arguments(argv=None) -> argparse.Namespace:
    parser = build_parser()
    known, _ = parser.parse_known_args(argv)
    if known.preset:
        preset = load_preset(known.preset)
        unknown = set(preset) - {a.dest for a in parser._actions}
        if unknown:
            raise ConfigurationError(f"chaves desconhecidas no preset: {sorted(unknown)}")
        parser.set_defaults(**preset)
    return parser.parse_args(argv)


def load_records(paths, units: str) -> List[GroundMotion]:
    """Lê os registros garantindo nomes únicos"""
    records = []
    seen: Dict[str, int] = {}
    for path in paths:
        stem = Path(path).stem
        seen[stem] = seen.get(stem, 0) + 1
        name = stem if seen[stem] == 1 else f"{stem}-{seen[stem]}"
        gm = read_ground_motion(path, units=units, name=name)
        logger.info(f"🌎 Registro '{gm.name}': {gm.n_steps} passos, dt={gm.dt:g}s, PGA={gm.pga():.3f} m/s²")
        records.append(gm)
    return records


def _params(config: RunConfig) -> ConstraintParams:
    p = config.slp_overrides.get("p_start", settings.p_start)
    q = config.slp_overrides.get("q_start", settings.q_start)
    return ConstraintParams(p=p, q=q)


def run_optimization(config: RunConfig, mode: str, model: StructuralModel,
                     scenarios: ScenarioSet, records: List[GroundMotion]) -> FinalDesign:
    fs_config = failsafe_config_from_settings(
        mode=mode,
        n_dampers=model.n_dampers,
        slp_overrides=config.slp_overrides,
        c_bar=config.c_bar,
        epsilon=config.epsilon,
        max_workers=config.max_workers,
    )
    return run_failsafe(model, scenarios, records, fs_config)


def _write_design_outputs(final: FinalDesign, config: RunConfig, model: StructuralModel,
                          scenarios: ScenarioSet, records: List[GroundMotion]):
    out = config.run_dir
    report_iterations(final, out, tag=final.mode)
    report_constraints(final.x, model, scenarios, records, final.final_params, config.c_bar,
                       out_dir=out, tag=final.mode, max_workers=config.max_workers)
    write_manifest(final, scenarios, out / f"manifest_{final.mode}.json")


def cmd_optimize(config: RunConfig, model, scenarios, records) -> int:
    final = run_optimization(config, config.mode, model, scenarios, records)
    frame = report_design(final, model, out_dir=config.run_dir)
    report_evaluations({final.mode: final}, config.run_dir)
    _write_design_outputs(final, config, model, scenarios, records)
    logger.info("📄 Coeficientes ótimos (kNs/m):\n" + frame.to_string(index=False))
    if not final.converged:
        raise NonConvergenceError(f"modo {final.mode} terminou sem convergir (max g = {final.certificate.max_g:+.4e})")
    return EXIT_OK


def cmd_compare(config: RunConfig, model, scenarios, records) -> int:
    designs = {mode: run_optimization(config, mode, model, scenarios, records)
               for mode in (MODE_BASIC, MODE_FAILSAFE, MODE_FULLSET)}
    out = config.run_dir
    frame = report_design(designs[MODE_FAILSAFE], model,
                          comparison={m: d for m, d in designs.items() if m != MODE_FAILSAFE}, out_dir=out)
    evaluations = report_evaluations(designs, out)
    for final in designs.values():
        _write_design_outputs(final, config, model, scenarios, records)

    fraction = basic_fraction(designs[MODE_BASIC], designs[MODE_FAILSAFE])
    ws, full = designs[MODE_FAILSAFE], designs[MODE_FULLSET]
    summary = {
        "basic_fraction": fraction,
        "cost_gap": abs(ws.cost - full.cost) / max(full.cost, 1e-12),
        "eval_ratio": ws.eval_counter / max(full.eval_counter, 1),
    }
    pd.DataFrame([summary]).to_csv(out / "comparison.csv", index=False, float_format=FLOAT_FORMAT,
                                   lineterminator="\n")
    logger.info("📄 Coeficientes ótimos (kNs/m):\n" + frame.to_string(index=False))
    logger.info("📄 Avaliações:\n" + evaluations.to_string(index=False))
    logger.info(f"🎯 Projeto básico = {fraction:.0%} do amortecimento fail-safe; "
                f"diferença WS x completo = {summary['cost_gap']:.2%}")

    stalled = [m for m, d in designs.items() if not d.converged]
    if stalled:
        raise NonConvergenceError(f"modos sem convergência: {stalled}")
    return EXIT_OK


def cmd_simulate(config: RunConfig, model, scenarios, records) -> int:
    """Uma análise no tempo por registro, sem otimização"""
    value = 0.0 if config.x_value is None else config.x_value
    x = np.full(model.n_dampers, value)
    frame = report_constraints(x, model, ScenarioSet.no_failure_only(model.n_dampers), records,
                               _params(config), config.c_bar, out_dir=config.run_dir, tag="simulate",
                               max_workers=config.max_workers)
    logger.info("📄 Restrições (sem falha):\n" + frame.to_string(index=False))
    return EXIT_OK


def _audit_scenarios(scenarios: ScenarioSet):
    """Sem falha + primeiro cenário de cada grupo habilitado"""
    picked = [scenarios[0]]
    for kind in ("complete", "partial"):
        first = next((s for s in scenarios if s.kind == kind), None)
        if first is not None:
            picked.append(first)
    return picked


def cmd_check_gradients(config: RunConfig, model, scenarios, records) -> int:
    value = 0.5 if config.x_value is None else config.x_value
    design = DesignVector(np.full(model.n_dampers, value), config.c_bar)
    params = _params(config)
    rows = []
    worst = 0.0
    for scenario in _audit_scenarios(scenarios):
        for gm in records:
            check = check_gradients(model, design, scenario, gm, params)
            worst = max(worst, check.max_relative_error)
            for k in range(model.n_dampers):
                rows.append({
                    "scenario": scenario.id,
                    "label": scenario.label(),
                    "record": gm.name,
                    "p": params.p,
                    "q": params.q,
                    "damper": model.damper_labels[k],
                    "adjoint": check.adjoint[k],
                    "finite_difference": check.finite_difference[k],
                    "relative_error": check.relative_errors[k],
                })
    out = config.run_dir
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(out / "gradient_check.csv", index=False, float_format=FLOAT_FORMAT,
                              lineterminator="\n")
    logger.info(f"🔍 Erro relativo máximo: {worst:.2e} ({out / 'gradient_check.csv'})")
    return EXIT_OK


COMMANDS = {
    MODE_FAILSAFE: cmd_optimize,
    MODE_BASIC: cmd_optimize,
    MODE_FULLSET: cmd_optimize,
    MODE_COMPARE: cmd_compare,
    MODE_SIMULATE: cmd_simulate,
    MODE_CHECK_GRADIENTS: cmd_check_gradients,
}


def run(config: RunConfig) -> int:
    model = parse_model(config.model_path)
    records = load_records(config.record_paths, config.accel_units)
    scenarios = enumerate_scenarios(model.n_dampers, config.complete_k, config.partial_k,
                                    nu=config.nu, cap=settings.max_scenarios)
    return COMMANDS[config.mode](config, model, scenarios, records)


def main(argv=None) -> int:
    try:
        args = parse_arguments(argv)
        config = RunConfig.from_args(args)
    except FailsafeError as e:
        configure_logging(level="INFO")
        logger.error(f"❌ {e}")
        return e.exit_code
    except ValidationError as e:
        configure_logging(level="INFO")
        logger.error(f"❌ Configuração inválida: {e}")
        return EXIT_INPUT_ERROR

    if config.out_dir == settings.output_dir:
        settings.ensure_directories()
    config.run_dir.mkdir(parents=True, exist_ok=True)
    # um log por execução, ao lado dos relatórios
    configure_logging(config.run_dir / settings.log_file.name, args.log_level or settings.log_level)
    logger.info(f"🚀 Execução '{config.mode}' → {config.run_dir}")

    try:
        return run(config)
    except FailsafeError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ Entrada inválida: {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
