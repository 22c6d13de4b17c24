#!/usr/bin/env python3
"""
Gera um pórtico de cisalhamento (arquivo JSON de modelo) e registros
sísmicos sintéticos para execuções rápidas do otimizador
"""

import argparse
import math
import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.dynamics import synthetic_ground_motion, write_ground_motion
from core.errors import FailsafeError
from core.logging_setup import configure_logging
from core.model import build_shear_frame, compute_lowest_modes
from core.model_io import write_model


def main():
    parser = argparse.ArgumentParser(
        description="Gera pórtico de cisalhamento + registros sintéticos",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
EXEMPLOS DE USO:

  # Pórtico de 8 pavimentos com um amortecedor por pavimento e 5 registros
  python scripts/make_shear_frame.py --stories 8 --records 5

  # Rigidez reduzida 10% por pavimento e dois amortecedores no térreo
  python scripts/make_shear_frame.py --stories 4 --taper 0.1 --dampers 0 0 1 2 3
        """,
    )
    parser.add_argument("--stories", type=int, default=8, help="Número de pavimentos (padrão: 8)")
    parser.add_argument("--mass", type=float, default=300.0, help="Massa por pavimento em ton (padrão: 300)")
    parser.add_argument("--stiffness", type=float, default=150000.0,
                        help="Rigidez do térreo em kN/m (padrão: 150000)")
    parser.add_argument("--taper", type=float, default=0.0,
                        help="Redução relativa de rigidez por pavimento (padrão: 0)")
    parser.add_argument("--d-allow", type=float, default=0.035, help="Drift admissível em m (padrão: 0.035)")
    parser.add_argument("--zeta", type=float, default=0.05, help="Amortecimento de Rayleigh (padrão: 0.05)")
    parser.add_argument("--dampers", type=int, nargs="+",
                        help="Pavimentos (0-based) com amortecedor; padrão: um por pavimento")
    parser.add_argument("--records", type=int, default=3, help="Quantidade de registros sintéticos")
    parser.add_argument("--duration", type=float, default=20.0, help="Duração dos registros em s")
    parser.add_argument("--dt", type=float, default=0.01, help="Passo dos registros em s")
    parser.add_argument("--pga", type=float, default=3.0, help="PGA em m/s²")
    parser.add_argument("--seed", type=int, default=0, help="Semente do primeiro registro")
    parser.add_argument("--out", default="data", help="Diretório de saída (padrão: data)")

    args = parser.parse_args()
    configure_logging(level="INFO")

    try:
        masses = [args.mass] * args.stories
        stiffnesses = [args.stiffness * (1.0 - args.taper) ** j for j in range(args.stories)]
        model = build_shear_frame(masses, stiffnesses, args.d_allow, args.dampers, zeta=args.zeta,
                                  name=f"shear-frame-{args.stories}")
    except (FailsafeError, ValueError) as e:
        print(f"❌ Parâmetros inválidos: {e}")
        sys.exit(2)

    out = Path(args.out)
    model_path = out / f"{model.name}.json"
    write_model(model, model_path)
    (w1, _), = compute_lowest_modes(model, 1)
    print(f"✅ Modelo salvo em {model_path} (T₁ = {2 * math.pi / w1:.3f}s, "
          f"{model.n_dampers} amortecedores)")

    for i in range(args.records):
        gm = synthetic_ground_motion(duration=args.duration, dt=args.dt, pga=args.pga,
                                     seed=args.seed + i, name=f"synthetic-{args.seed + i}")
        path = out / "records" / f"{gm.name}.txt"
        write_ground_motion(path, gm)
        print(f"   💾 {path}")

    print(f"🎉 Pronto: python run_failsafe.py --model {model_path} --records {out}/records/*.txt "
          f"--complete-k 1 --partial-k 2")


if __name__ == "__main__":
    main()
