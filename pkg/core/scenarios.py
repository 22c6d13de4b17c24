"""
Cenários de falha dos amortecedores (falha completa e parcial)

Índices de amortecedores são 0-based na API; os rótulos de relatório
usam numeração 1-based, como nas tabelas de projeto.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from core.errors import ScenarioLimitError

logger = logging.getLogger(__name__)

KIND_NONE = "none"
KIND_COMPLETE = "complete"
KIND_PARTIAL = "partial"


@dataclass(frozen=True)
class FailureScenario:
    """Padrão de dano: conjunto J de amortecedores e fator ν aplicado a eles"""

    id: int
    damaged: Tuple[int, ...] = ()
    factor: float = 0.0
    kind: str = KIND_NONE
    # ν_j individual (opcional); sobrescreve `factor` para os índices presentes
    per_damper: Optional[Tuple[Tuple[int, float], ...]] = None

    def __post_init__(self):
        if not 0.0 <= self.factor <= 1.0:
            raise ValueError(f"Fator de dano fora de [0, 1]: {self.factor}")
        if self.per_damper:
            for j, nu in self.per_damper:
                if not 0.0 <= nu <= 1.0:
                    raise ValueError(f"Fator de dano do amortecedor {j} fora de [0, 1]: {nu}")
        if len(set(self.damaged)) != len(self.damaged):
            raise ValueError(f"Índices repetidos no cenário {self.id}: {self.damaged}")

    @property
    def is_no_failure(self) -> bool:
        return not self.damaged

    def factor_of(self, j: int) -> float:
        """ν efetivo do amortecedor j neste cenário (1 se não danificado)"""
        if j not in self.damaged:
            return 1.0
        if self.per_damper:
            overrides = dict(self.per_damper)
            if j in overrides:
                return overrides[j]
        return self.factor

    def retention(self, n_d: int) -> np.ndarray:
        """Vetor de multiplicadores por amortecedor: 1 fora de J, ν dentro de J"""
        out = np.ones(n_d)
        for j in self.damaged:
            if j >= n_d or j < 0:
                raise IndexError(f"Amortecedor {j} fora de 0..{n_d - 1} no cenário {self.id}")
            out[j] = self.factor_of(j)
        return out

    def label(self) -> str:
        if self.is_no_failure:
            return "no-failure"
        members = ",".join(str(j + 1) for j in self.damaged)
        if self.kind == KIND_COMPLETE or self.factor == 0.0:
            return f"complete{{{members}}}"
        return f"partial{{{members}}}@{self.factor:g}"


NO_FAILURE = FailureScenario(id=0)


@dataclass(frozen=True)
class ScenarioSet:
    """Conjunto ordenado de cenários; ids densos em 0..N_FS-1"""

    scenarios: Tuple[FailureScenario, ...]
    n_dampers: int
    n_c: int = 0
    n_p: int = 0
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ids = [s.id for s in self.scenarios]
        if ids != list(range(len(ids))):
            raise ValueError("Ids de cenário devem ser únicos e densos a partir de 0")
        if not self.scenarios or not self.scenarios[0].is_no_failure:
            raise ValueError("O cenário 0 deve ser o cenário sem falha")

    @property
    def n_fs(self) -> int:
        return len(self.scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self) -> Iterator[FailureScenario]:
        return iter(self.scenarios)

    def __getitem__(self, scenario_id: int) -> FailureScenario:
        return self.scenarios[scenario_id]

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(s.id for s in self.scenarios)

    def describe(self, scenario_id: int) -> str:
        return self.scenarios[scenario_id].label()

    def subset(self, ids: Sequence[int]) -> Tuple[FailureScenario, ...]:
        return tuple(self.scenarios[i] for i in ids)

    @classmethod
    def no_failure_only(cls, n_dampers: int) -> "ScenarioSet":
        """Conjunto com apenas o cenário sem falha (projeto básico)"""
        return cls(scenarios=(NO_FAILURE,), n_dampers=n_dampers)

    def to_records(self):
        """Lista serializável para o manifesto da execução"""
        return [
            {
                "id": s.id,
                "label": s.label(),
                "damaged": [j + 1 for j in s.damaged],
                "factor": s.factor,
            }
            for s in self.scenarios
        ]


def count_scenarios(n_d: int, complete_k: Optional[int], partial_k: Optional[int]) -> int:
    """N_FS = 1 + C(N_d, k_c) + C(N_d, k_p); grupo com k nulo/zero fica desativado"""
    total = 1
    if complete_k:
        total += math.comb(n_d, complete_k)
    if partial_k:
        total += math.comb(n_d, partial_k)
    return total


def enumerate_scenarios(
    n_d: int,
    complete_k: Optional[int] = None,
    partial_k: Optional[int] = None,
    nu: float = 0.5,
    cap: int = 100_000,
) -> ScenarioSet:
    """Enumera cenário sem falha + falhas completas (ν=0) + falhas parciais (ν=nu)

    Subconjuntos em ordem lexicográfica; complete_k/partial_k nulos ou zero
    desativam o grupo correspondente.
    """
    if n_d < 1:
        raise ValueError("É necessário ao menos um amortecedor")
    for name, k in (("complete_k", complete_k), ("partial_k", partial_k)):
        if k is not None and not 0 <= k <= n_d:
            raise ValueError(f"{name}={k} fora de 0..{n_d}")
    if partial_k and not 0.0 < nu < 1.0:
        raise ValueError(f"Falha parcial exige 0 < nu < 1 (recebido {nu})")

    total = count_scenarios(n_d, complete_k, partial_k)
    if total > cap:
        raise ScenarioLimitError(
            f"{total} cenários excedem o limite configurado ({cap}); "
            f"reduza --complete-k/--partial-k"
        )

    scenarios = [NO_FAILURE]
    n_c = n_p = 0
    if complete_k:
        for subset in itertools.combinations(range(n_d), complete_k):
            scenarios.append(FailureScenario(
                id=len(scenarios), damaged=subset, factor=0.0, kind=KIND_COMPLETE))
            n_c += 1
    if partial_k:
        for subset in itertools.combinations(range(n_d), partial_k):
            scenarios.append(FailureScenario(
                id=len(scenarios), damaged=subset, factor=nu, kind=KIND_PARTIAL))
            n_p += 1

    logger.info(f"🧩 Cenários de falha: 1 + {n_c} completos + {n_p} parciais = {len(scenarios)}")
    return ScenarioSet(
        scenarios=tuple(scenarios),
        n_dampers=n_d,
        n_c=n_c,
        n_p=n_p,
        meta={"complete_k": complete_k, "partial_k": partial_k, "nu": nu},
    )
