#!/usr/bin/env python3
"""
Testes da integração de Newmark, espectros e leitura de registros

Uso:
    python scripts/test_dynamics.py
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from core.dynamics import (
    GroundMotion,
    NewmarkIntegrator,
    equilibrium_residuals,
    newmark_solve,
    read_ground_motion,
    response_spectrum,
    select_dominant,
    spectral_displacement,
    synthetic_ground_motion,
    write_ground_motion,
)
from core.errors import GroundMotionFormatError
from core.model import DesignVector, assemble_added_damping


def test_zero_record_gives_zero_response(two_dof_model):
    gm = GroundMotion("zero", 0.01, np.zeros(200))
    C_d = assemble_added_damping(two_dof_model, DesignVector([0.5, 0.5], c_bar=10.0))
    history = newmark_solve(two_dof_model, C_d, gm)
    assert not np.any(history.u)
    assert not np.any(history.v)
    assert not np.any(history.a)


def test_step_load_closed_form():
    m, k, F = 1.0, (2.0 * np.pi) ** 2, 3.0
    w = np.sqrt(k / m)
    dt = 1e-3
    force = np.full((2001, 1), F)
    history = NewmarkIntegrator().solve(np.array([[m]]), np.zeros((1, 1)), np.array([[k]]), force, dt)
    t = history.times()
    exact = F / k * (1.0 - np.cos(w * t))
    assert history.a[0, 0] == pytest.approx(F / m)
    np.testing.assert_allclose(history.u[:, 0], exact, atol=1e-3 * F / k)


def test_sdof_matches_fine_reference():
    T, zeta = 1.0, 0.05
    gm = synthetic_ground_motion(duration=20.0, dt=T / 100, pga=3.0, seed=11)
    coarse = spectral_displacement(gm, T, zeta)

    fine_dt = gm.dt / 100
    t_fine = np.arange(0.0, gm.duration + 0.5 * fine_dt, fine_dt)
    fine = GroundMotion("fine", fine_dt, np.interp(t_fine, gm.times(), gm.values))
    reference = spectral_displacement(fine, T, zeta)
    assert coarse == pytest.approx(reference, rel=0.01)


def test_undamped_free_vibration_conserves_energy():
    m, k = 2.0, 50.0
    period = 2.0 * np.pi * np.sqrt(m / k)
    n_steps = 10_000
    history = NewmarkIntegrator().solve(
        np.array([[m]]), np.zeros((1, 1)), np.array([[k]]), np.zeros((n_steps + 1, 1)), period / 50,
        u0=np.array([0.1]))
    energy = 0.5 * m * history.v[:, 0] ** 2 + 0.5 * k * history.u[:, 0] ** 2
    assert np.abs(energy / energy[0] - 1.0).max() <= 1e-3


def test_resonant_peak_reaches_steady_state_amplitude():
    T, zeta, amplitude = 1.0, 0.05, 2.0
    w = 2.0 * np.pi / T
    t = 0.01 * np.arange(3001)  # 30 ciclos
    gm = GroundMotion("resonante", 0.01, amplitude * np.sin(w * t))
    steady = amplitude / (2.0 * zeta * w ** 2)
    assert spectral_displacement(gm, T, zeta) == pytest.approx(steady, rel=0.05)


def test_equilibrium_holds_at_every_step(two_dof_model, synthetic_record):
    C_d = assemble_added_damping(two_dof_model, DesignVector([0.3, 0.7], c_bar=20.0))
    history = newmark_solve(two_dof_model, C_d, synthetic_record)
    assert equilibrium_residuals(two_dof_model, C_d, synthetic_record, history).max() <= 1e-9


def test_linear_in_record_scale(two_dof_model, short_record):
    C_d = assemble_added_damping(two_dof_model, DesignVector([0.5, 0.5], c_bar=10.0))
    base = newmark_solve(two_dof_model, C_d, short_record)
    doubled = newmark_solve(two_dof_model, C_d, short_record.scaled(2.0))
    np.testing.assert_allclose(doubled.u, 2.0 * base.u, rtol=1e-10, atol=1e-14)


def test_linear_acceleration_variant_runs(sdof_model, short_record):
    C_d = np.zeros((1, 1))
    history = newmark_solve(sdof_model, C_d, short_record, beta=1.0 / 6.0)
    assert history.n_steps == short_record.n_steps


def test_unsupported_parameters():
    with pytest.raises(ValueError):
        NewmarkIntegrator(beta=0.3)
    with pytest.raises(ValueError):
        NewmarkIntegrator(gamma=0.6)


def test_resonant_record_is_dominant():
    t = 0.01 * np.arange(1001)
    resonant = GroundMotion("1hz", 0.01, np.sin(2.0 * np.pi * 1.0 * t))
    detuned = GroundMotion("5hz", 0.01, np.sin(2.0 * np.pi * 5.0 * t))
    assert select_dominant([detuned, resonant], period=1.0) == 1
    assert spectral_displacement(resonant, 1.0) > 5 * spectral_displacement(detuned, 1.0)


def test_response_spectrum_matches_pointwise(synthetic_record):
    periods = [0.2, 0.5, 1.0]
    np.testing.assert_allclose(
        response_spectrum(synthetic_record, periods),
        [spectral_displacement(synthetic_record, T) for T in periods])


def test_ground_motion_properties():
    gm = GroundMotion("g", 0.02, [0.0, 1.0, -2.0, 0.5])
    assert gm.n_steps == 3
    assert gm.duration == pytest.approx(0.06)
    assert gm.pga() == 2.0
    assert gm.scaled(2.0).pga() == 4.0
    with pytest.raises(GroundMotionFormatError):
        GroundMotion("bad", 0.0, [0.0, 1.0])


def test_read_two_column(tmp_path):
    path = tmp_path / "rec.txt"
    path.write_text("# tempo aceleração\n0.00 0.0\n0.01 0.5\n0.02 -1.0\n0.03 0.25\n")
    gm = read_ground_motion(path)
    assert gm.name == "rec"
    assert gm.dt == pytest.approx(0.01)
    np.testing.assert_allclose(gm.values, [0.0, 0.5, -1.0, 0.25])

    in_g = read_ground_motion(path, units="g", g_accel=9.81)
    np.testing.assert_allclose(in_g.values, 9.81 * gm.values)


def test_read_dt_header_round_trip(tmp_path, synthetic_record):
    path = tmp_path / "synthetic.txt"
    write_ground_motion(path, synthetic_record)
    gm = read_ground_motion(path)
    assert gm.dt == synthetic_record.dt
    np.testing.assert_array_equal(gm.values, synthetic_record.values)


def test_read_peer_at2(tmp_path):
    path = tmp_path / "RSN1_TEST.AT2"
    path.write_text(
        "PEER NGA STRONG MOTION DATABASE RECORD\n"
        "TEST STATION, 000\n"
        "ACCELERATION TIME SERIES IN UNITS OF G\n"
        "NPTS=    5, DT=   .0050 SEC\n"
        "  .1000000E-01  .2000000E-01 -.1000000E-01\n"
        "  .0000000E+00  .5000000E-02\n")
    gm = read_ground_motion(path, g_accel=9.81)
    assert gm.dt == pytest.approx(0.005)
    np.testing.assert_allclose(gm.values, 9.81 * np.array([0.01, 0.02, -0.01, 0.0, 0.005]))


def test_reader_errors(tmp_path):
    uneven = tmp_path / "uneven.txt"
    uneven.write_text("0.0 0.0\n0.01 1.0\n0.03 0.0\n")
    with pytest.raises(GroundMotionFormatError):
        read_ground_motion(uneven)

    garbage = tmp_path / "garbage.txt"
    garbage.write_text("dt=0.01\n0.0\nabc\n")
    with pytest.raises(GroundMotionFormatError):
        read_ground_motion(garbage)

    short_peer = tmp_path / "short.AT2"
    short_peer.write_text("a\nb\nc\nNPTS=    4, DT=   .0100 SEC\n 0.1 0.2\n")
    with pytest.raises(GroundMotionFormatError):
        read_ground_motion(short_peer)

    with pytest.raises(GroundMotionFormatError):
        read_ground_motion(tmp_path / "missing.txt")

    with pytest.raises(GroundMotionFormatError):
        read_ground_motion(uneven, units="ft/s2")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
