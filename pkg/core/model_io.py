"""
Leitura e escrita do arquivo de modelo (JSON)

Formato:
    {
      "name": "...", "n_dof": 2,
      "mass": [[...], [...]] | [m11, m12, ...],
      "stiffness": ..., "inherent_damping": ... | "rayleigh": {"zeta": 0.05},
      "influence": [...], "drift_transform": [[...]], "d_allow": [...] | 0.035,
      "dampers": [{"row": [...], "label": "..."}]
    }
Unidades: kN, m, s, ton.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.errors import ModelValidationError
from core.model import StructuralModel, with_rayleigh

logger = logging.getLogger(__name__)

Matrix = Union[List[List[float]], List[float]]


class RayleighSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    zeta: float = Field(0.05, ge=0)


class DamperSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    row: Union[List[float], List[List[float]]]
    label: Optional[str] = None


class ModelDocument(BaseModel):
    """Esquema do arquivo de modelo"""

    model_config = ConfigDict(extra="forbid")

    name: str = "model"
    n_dof: int = Field(..., ge=1)
    mass: Matrix
    stiffness: Matrix
    inherent_damping: Optional[Matrix] = None
    rayleigh: Optional[RayleighSpec] = None
    influence: List[float]
    drift_transform: Union[List[List[float]], List[float]]
    d_allow: Union[List[float], float]
    dampers: List[DamperSpec] = Field(..., min_length=1)

    @field_validator("dampers")
    @classmethod
    def _nonempty_rows(cls, dampers):
        for i, d in enumerate(dampers):
            if not d.row:
                raise ValueError(f"amortecedor {i + 1} sem linha de transformação")
        return dampers


def _line_of(text: str, key) -> Optional[int]:
    if key is None:
        return None
    needle = f'"{key}"'
    for no, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return no
    return None


def _square(data, n: int, field: str, text: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1 and arr.size == n * n:
        arr = arr.reshape(n, n)
    if arr.shape != (n, n):
        raise ModelValidationError(
            f"esperado {n}x{n} (n_dof={n}), recebido {arr.shape}", field=field, line=_line_of(text, field))
    return arr


def parse_model(path) -> StructuralModel:
    """Lê e valida o arquivo de modelo; erros indicam linha e campo"""
    path = Path(path)
    if not path.exists():
        raise ModelValidationError(f"arquivo de modelo não encontrado: {path}")
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelValidationError(f"JSON inválido: {e.msg}", line=e.lineno) from None

    try:
        doc = ModelDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first["loc"]
        field = str(loc[0]) if loc else None
        raise ModelValidationError(first["msg"], field=".".join(str(p) for p in loc) or None,
                                   line=_line_of(text, field)) from None

    n = doc.n_dof
    mass = _square(doc.mass, n, "mass", text)
    stiffness = _square(doc.stiffness, n, "stiffness", text)
    inherent = None
    if doc.inherent_damping is not None:
        if doc.rayleigh is not None:
            raise ModelValidationError("use inherent_damping ou rayleigh, não ambos",
                                       field="rayleigh", line=_line_of(text, "rayleigh"))
        inherent = _square(doc.inherent_damping, n, "inherent_damping", text)

    H = np.atleast_2d(np.asarray(doc.drift_transform, dtype=float))
    d_allow = np.asarray(doc.d_allow, dtype=float)
    if d_allow.ndim == 0:
        d_allow = np.full(H.shape[0], float(d_allow))

    labels = tuple(d.label or str(i + 1) for i, d in enumerate(doc.dampers))
    try:
        model = StructuralModel(
            mass=mass,
            stiffness=stiffness,
            influence=np.asarray(doc.influence, dtype=float),
            drift_transform=H,
            d_allow=d_allow,
            damper_transforms=tuple(np.atleast_2d(np.asarray(d.row, dtype=float)) for d in doc.dampers),
            inherent_damping=inherent,
            name=doc.name,
            damper_labels=labels,
        )
    except ModelValidationError as e:
        raise ModelValidationError(str(e).split("] ", 1)[-1], field=e.field,
                                   line=_line_of(text, e.field)) from None

    if doc.rayleigh is not None:
        model = with_rayleigh(model, doc.rayleigh.zeta)
    logger.info(f"📄 Modelo '{model.name}': {model.n_dof} GDL, {model.n_drifts} drifts, "
                f"{model.n_dampers} amortecedores candidatos")
    return model


def model_to_document(model: StructuralModel) -> dict:
    return {
        "name": model.name,
        "n_dof": model.n_dof,
        "mass": model.mass.tolist(),
        "stiffness": model.stiffness.tolist(),
        "inherent_damping": model.inherent_damping.tolist(),
        "influence": model.influence.tolist(),
        "drift_transform": model.drift_transform.tolist(),
        "d_allow": model.d_allow.tolist(),
        "dampers": [
            {"row": (T[0] if T.shape[0] == 1 else T).tolist(), "label": label}
            for T, label in zip(model.damper_transforms, model.damper_labels)
        ],
    }


def write_model(model: StructuralModel, path):
    """Escreve o modelo com o amortecimento inerente já montado"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(model_to_document(model), f, indent=2)
        f.write("\n")
