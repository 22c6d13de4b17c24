"""
Fixtures compartilhadas pelos testes em scripts/
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.dynamics import GroundMotion, synthetic_ground_motion
from core.model import StructuralModel, build_shear_frame, with_rayleigh


@pytest.fixture
def sdof_model():
    """Oscilador com m = 1, T = 1 s, um amortecedor no próprio GDL"""
    k = (2.0 * np.pi) ** 2
    return StructuralModel(
        mass=[[1.0]],
        stiffness=[[k]],
        influence=[1.0],
        drift_transform=[[1.0]],
        d_allow=[0.05],
        damper_transforms=([[1.0]],),
        name="sdof",
    )


@pytest.fixture
def two_dof_model():
    """Pórtico de 2 pavimentos, um amortecedor por pavimento, Rayleigh 2%"""
    model = StructuralModel(
        mass=np.eye(2),
        stiffness=[[200.0, -100.0], [-100.0, 100.0]],
        influence=[1.0, 1.0],
        drift_transform=[[1.0, 0.0], [-1.0, 1.0]],
        d_allow=[0.01, 0.01],
        damper_transforms=([[1.0, 0.0]], [[-1.0, 1.0]]),
        name="two-dof",
    )
    return with_rayleigh(model, 0.02)


@pytest.fixture
def shear_frame():
    return build_shear_frame([1.0, 1.0, 1.0], [300.0, 250.0, 200.0], 0.02, zeta=0.05, name="frame3")


@pytest.fixture
def short_record():
    """50 passos de uma senoide de 1.5 Hz"""
    t = 0.02 * np.arange(51)
    return GroundMotion(name="short", dt=0.02, accel=2.0 * np.sin(2.0 * np.pi * 1.5 * t))


@pytest.fixture
def synthetic_record():
    return synthetic_ground_motion(duration=10.0, dt=0.01, pga=3.0, seed=7)
