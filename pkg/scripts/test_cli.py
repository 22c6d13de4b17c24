#!/usr/bin/env python3
"""
Testes da CLI: arquivo de modelo, modos simulate/check-gradients/basic,
códigos de saída e saídas determinísticas

Uso:
    python scripts/test_cli.py
"""

import json
import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from core.cli import main
from core.dynamics import GroundMotion, write_ground_motion
from core.errors import EXIT_INPUT_ERROR, EXIT_NON_CONVERGENCE, EXIT_OK, ModelValidationError
from core.model_io import parse_model, write_model

SDOF_DOCUMENT = """{
  "name": "sdof",
  "n_dof": 1,
  "mass": [[1.0]],
  "stiffness": [[39.47841760435743]],
  "rayleigh": {"zeta": 0.05},
  "influence": [1.0],
  "drift_transform": [[1.0]],
  "d_allow": 0.035,
  "dampers": [{"row": [1.0], "label": "base"}]
}
"""

TWO_DOF_DOCUMENT = {
    "name": "two-dof",
    "n_dof": 2,
    "mass": [[1.0, 0.0], [0.0, 1.0]],
    "stiffness": [[200.0, -100.0], [-100.0, 100.0]],
    "rayleigh": {"zeta": 0.02},
    "influence": [1.0, 1.0],
    "drift_transform": [[1.0, 0.0], [-1.0, 1.0]],
    "d_allow": [0.01, 0.01],
    "dampers": [{"row": [1.0, 0.0]}, {"row": [-1.0, 1.0]}],
}


@pytest.fixture
def sdof_file(tmp_path):
    path = tmp_path / "sdof.json"
    path.write_text(SDOF_DOCUMENT)
    return path


@pytest.fixture
def two_dof_file(tmp_path):
    path = tmp_path / "two_dof.json"
    path.write_text(json.dumps(TWO_DOF_DOCUMENT, indent=2))
    return path


def _record(tmp_path, name, values, dt=0.02):
    path = tmp_path / f"{name}.txt"
    write_ground_motion(path, GroundMotion(name, dt, np.asarray(values, dtype=float)))
    return path


def test_parse_minimal_sdof(sdof_file):
    model = parse_model(sdof_file)
    assert model.n_dof == 1
    assert model.n_dampers == 1
    assert model.damper_labels == ("base",)
    np.testing.assert_allclose(model.d_allow, [0.035])
    assert model.inherent_damping[0, 0] == pytest.approx(2 * 0.05 * 2 * np.pi)


def test_dimension_mismatch_names_field_and_line(tmp_path):
    document = dict(TWO_DOF_DOCUMENT, drift_transform=[[1.0, 0.0, 0.0]], d_allow=[0.01])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document, indent=2))
    with pytest.raises(ModelValidationError) as info:
        parse_model(path)
    assert info.value.field == "drift_transform"
    assert info.value.line is not None
    assert "drift_transform" in str(info.value)


def test_schema_errors(tmp_path):
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(dict(TWO_DOF_DOCUMENT, colour="blue")))
    with pytest.raises(ModelValidationError):
        parse_model(path)

    path = tmp_path / "broken.json"
    path.write_text('{\n  "n_dof": 1,\n  "mass": [[1.0]\n}\n')
    with pytest.raises(ModelValidationError) as info:
        parse_model(path)
    assert info.value.line is not None

    with pytest.raises(ModelValidationError):
        parse_model(tmp_path / "missing.json")


def test_write_then_parse_is_identical(two_dof_file, tmp_path):
    model = parse_model(two_dof_file)
    out = tmp_path / "copy.json"
    write_model(model, out)
    again = parse_model(out)
    for attr in ("mass", "stiffness", "inherent_damping", "influence", "drift_transform", "d_allow"):
        np.testing.assert_array_equal(getattr(again, attr), getattr(model, attr))
    for a, b in zip(again.damper_transforms, model.damper_transforms):
        np.testing.assert_array_equal(a, b)
    assert again.damper_labels == model.damper_labels
    assert again.name == model.name


def test_simulate_zero_record_writes_zero_drifts(sdof_file, tmp_path):
    record = _record(tmp_path, "zero", np.zeros(101))
    out = tmp_path / "out"
    code = main(["--model", str(sdof_file), "--records", str(record), "--mode", "simulate",
                 "--out", str(out)])
    assert code == EXIT_OK
    drifts = pd.read_csv(out / "drifts_simulate_zero_s0.csv")
    assert list(drifts.columns) == ["time", "drift1"]
    assert (drifts["drift1"] == 0.0).all()
    constraints = pd.read_csv(out / "constraints_simulate.csv")
    assert constraints["g"].tolist() == [-1.0]
    assert constraints["threshold"].tolist() == [1.0]


def test_outputs_are_deterministic(two_dof_file, tmp_path):
    t = 0.02 * np.arange(101)
    record = _record(tmp_path, "sine", 0.5 * np.sin(2 * np.pi * 1.5 * t))
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["--model", str(two_dof_file), "--records", str(record), "--mode", "simulate",
                     "--x", "0.3", "--complete-k", "1", "--out", str(out)]) == EXIT_OK
        outputs.append(out)
    for name in ("constraints_simulate.csv", "drifts_simulate_sine_s0.csv"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()


def test_check_gradients_report(two_dof_file, tmp_path):
    t = 0.02 * np.arange(51)
    record = _record(tmp_path, "short", 2.0 * np.sin(2 * np.pi * 1.5 * t))
    out = tmp_path / "grad"
    code = main(["--model", str(two_dof_file), "--records", str(record), "--check-gradients",
                 "--complete-k", "1", "--partial-k", "1", "--cbar", "10", "--p-start", "8", "--q-start", "8",
                 "--out", str(out)])
    assert code == EXIT_OK
    report = pd.read_csv(out / "gradient_check.csv")
    assert sorted(report["label"].unique()) == ["complete{1}", "no-failure", "partial{1}@0.5"]
    assert report["relative_error"].max() <= 1e-6


def test_basic_run_with_weak_record(two_dof_file, tmp_path):
    t = 0.02 * np.arange(51)
    record = _record(tmp_path, "weak", 1e-4 * np.sin(2 * np.pi * t))
    out = tmp_path / "basic"
    code = main(["--model", str(two_dof_file), "--records", str(record), "--mode", "basic",
                 "--cbar", "10", "--imin", "2", "--imax", "5", "--out", str(out), "--tag", "run1"])
    assert code == EXIT_OK
    run_dir = out / "run1"
    design = pd.read_csv(run_dir / "design.csv")
    assert design.columns.tolist() == ["Location", "Basic"]
    assert design["Location"].tolist()[-2:] == ["J [kNs/m]", "J [Σx]"]
    manifest = json.loads((run_dir / "manifest_basic.json").read_text())
    assert manifest["mode"] == "basic"
    assert manifest["converged"] is True
    assert manifest["certificate"]["passed"] is True


def test_infeasible_run_reports_non_convergence(sdof_file, tmp_path):
    t = 0.02 * np.arange(51)
    record = _record(tmp_path, "strong", 50.0 * np.sin(2 * np.pi * t))
    code = main(["--model", str(sdof_file), "--records", str(record), "--mode", "basic",
                 "--cbar", "1", "--imin", "1", "--imax", "2", "--out", str(tmp_path / "stall")])
    assert code == EXIT_NON_CONVERGENCE


def test_input_errors_exit_with_code_two(sdof_file, tmp_path):
    record = _record(tmp_path, "zero", np.zeros(11))
    assert main(["--model", str(tmp_path / "nope.json"), "--records", str(record),
                 "--out", str(tmp_path / "o1")]) == EXIT_INPUT_ERROR
    assert main(["--model", str(sdof_file), "--out", str(tmp_path / "o2")]) == EXIT_INPUT_ERROR
    assert main(["--model", str(sdof_file), "--records", str(tmp_path / "none.txt"),
                 "--out", str(tmp_path / "o3")]) == EXIT_INPUT_ERROR
    assert main(["--model", str(sdof_file), "--records", str(record), "--complete-k", "3",
                 "--out", str(tmp_path / "o4")]) == EXIT_INPUT_ERROR


def test_preset_fills_flags(sdof_file, tmp_path):
    record = _record(tmp_path, "zero", np.zeros(11))
    preset = tmp_path / "run.toml"
    preset.write_text(
        f'model = "{sdof_file.as_posix()}"\n'
        f'records = ["{record.as_posix()}"]\n'
        f'mode = "simulate"\n'
        f'out = "{(tmp_path / "preset_out").as_posix()}"\n')
    assert main(["--preset", str(preset)]) == EXIT_OK
    assert (tmp_path / "preset_out" / "constraints_simulate.csv").exists()

    bad = tmp_path / "bad.toml"
    bad.write_text('colour = "blue"\n')
    assert main(["--preset", str(bad)]) == EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
