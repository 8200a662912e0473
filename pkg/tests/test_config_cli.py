import json

import numpy as np
import pytest

from spinctrl.cli import main
from spinctrl.config import (ConfigError, build_gate, build_grid, build_system,
                             config_from_dict, config_from_json, preset_config)
from spinctrl.propagation import field_from_csv, field_to_csv, grid_for
from spinctrl.propagation import ControlField


def test_preset_one_qubit_n1_matches_reference_parameters():
    cfg = preset_config("one_qubit_n1")
    system = build_system(cfg)
    assert (system.m, system.n) == (1, 1)
    np.testing.assert_allclose(system.frequencies, [1.0, 1.0 / (np.pi - 2.14)])
    assert system.frequencies[1] == pytest.approx(0.99841, abs=5e-6)
    assert system.couplings[0, 1] == 0.02
    assert cfg.grid.t_final == 25.0


def test_preset_frequency_ladders():
    cfg4 = preset_config("one_qubit_n4")
    w = build_system(cfg4).frequencies
    expected = [1.0, 1.0 / (np.pi - 2.14), np.pi - 2.14,
                1.0 / (np.pi - 2.1), np.pi - 2.1]
    np.testing.assert_allclose(w, expected)
    np.testing.assert_allclose(sorted(w[1:]), [0.96007, 0.99841, 1.00159, 1.04159],
                               atol=5e-6)
    cfg6 = preset_config("one_qubit_n6")
    w6 = build_system(cfg6).frequencies
    np.testing.assert_allclose(w6[5:], [1.0 / (np.pi - 2.0), np.pi - 2.0])
    cfg2 = preset_config("one_qubit_n2")
    assert build_system(cfg2).n == 2
    assert cfg2.grid.t_final == 15.4


def test_preset_cnot_triangle():
    cfg = preset_config("cnot_n1")
    system = build_system(cfg)
    assert (system.m, system.n) == (2, 1)
    np.testing.assert_allclose(system.frequencies,
                               [1.0, np.pi - 2.05, 1.0 / (np.pi - 2.14)])
    assert system.couplings[0, 1] == 0.1
    assert system.couplings[0, 2] == 0.01
    assert system.couplings[1, 2] == 0.01
    assert build_gate(cfg).name == "cnot"
    assert cfg.grid.t_final == 121.1


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset_config("three_qubits")


def test_config_round_trip_is_identity(tmp_path):
    cfg = preset_config("one_qubit_n1")
    path = tmp_path / "config.json"
    path.write_text(cfg.to_json())
    again = config_from_json(path)
    assert again == cfg
    assert again.sha256() == cfg.sha256()


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"systems": {}})
    with pytest.raises(ConfigError, match="ga"):
        config_from_dict({"ga": {"population": 3}})


def test_config_rejects_bad_values():
    base = preset_config("one_qubit_n1").to_dict()
    bad = json.loads(json.dumps(base))
    bad["gate"] = "toffoli"
    with pytest.raises(ConfigError, match="gate"):
        config_from_dict(bad)
    bad = json.loads(json.dumps(base))
    bad["system"]["frequencies"] = [1.0]
    with pytest.raises(ConfigError, match="frequencies"):
        config_from_dict(bad)
    bad = json.loads(json.dumps(base))
    bad["system"]["gamma"] = None
    with pytest.raises(ConfigError, match="gamma"):
        config_from_dict(bad)


def test_config_parse_error_reports_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"seed": 1,\n "threads": }')
    with pytest.raises(ConfigError, match=r"broken.json:2"):
        config_from_json(path)


def test_cli_requires_config_or_preset(capsys):
    assert main(["simulate"]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_rejects_unknown_gate(tmp_path, capsys):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["gate"] = "nonsense"
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path)]) == 2


def test_cli_simulate_zero_field_closed_system(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 5.0, "dt": 0.01}
    cfg["output_dir"] = str(tmp_path / "run")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--gamma", "0.0"]) == 0
    data = np.loadtxt(tmp_path / "run" / "trajectory.csv", delimiter=",", skiprows=1)
    t, s, f, k21 = data.T
    assert t[-1] == pytest.approx(5.0)
    np.testing.assert_allclose(s, 0.0, atol=1e-10)  # no coupling, no entropy
    np.testing.assert_allclose(k21, 0.0, atol=1e-10)
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["config"]["system"]["gamma"] == 0.0
    assert "config_sha256" in manifest and "versions" in manifest


def test_cli_simulate_reproduces_partial_revival(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 170.0, "dt": 0.01}
    cfg["output_dir"] = str(tmp_path / "run")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path)]) == 0
    data = np.loadtxt(tmp_path / "run" / "trajectory.csv", delimiter=",", skiprows=1)
    t, s = data[:, 0], data[:, 1]
    # partial revival dip near t ~ 156.6 for the x = 2.14 frequency pair
    window = (t > 140) & (t < 170)
    t_dip = t[window][np.argmin(s[window])]
    assert abs(t_dip - 156.6) < 1.0


def test_cli_optimize_crossapply_same_gamma_matches_report(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 8.0, "dt": 0.04}
    cfg["ga"].update({"population_size": 12, "generations": 4,
                      "tfinal_bounds": [8.0, 8.0], "fitness_target": None})
    cfg["grad"].update({"max_iterations": 15, "patience": 30})
    cfg["output_dir"] = str(tmp_path / "opt")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["optimize", "--config", str(path), "--seed", "5"]) == 0
    report = json.loads((tmp_path / "opt" / "report.json").read_text())
    field_csv = tmp_path / "opt" / "field.csv"
    assert field_csv.exists()

    out2 = tmp_path / "cross"
    assert main(["crossapply", "--config", str(path), "--field", str(field_csv),
                 "--out", str(out2), "--gamma", "0.02"]) == 0
    cross = json.loads((out2 / "crossapply.json").read_text())
    assert cross["fidelity"] == pytest.approx(report["fidelity"], abs=1e-12)

    # a different coupling gives a genuinely different score
    out3 = tmp_path / "cross0"
    assert main(["crossapply", "--config", str(path), "--field", str(field_csv),
                 "--out", str(out3), "--gamma", "0.0"]) == 0
    cross0 = json.loads((out3 / "crossapply.json").read_text())
    assert cross0["fidelity"] != pytest.approx(report["fidelity"], abs=1e-12)


def test_cli_optimize_budget_exit_code(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 8.0, "dt": 0.04}
    cfg["ga"].update({"population_size": 8, "generations": 2,
                      "tfinal_bounds": [8.0, 8.0], "fitness_target": None})
    cfg["grad"].update({"max_iterations": 3, "patience": 30})
    cfg["target_fidelity"] = 0.9999
    cfg["output_dir"] = str(tmp_path / "opt")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["optimize", "--config", str(path)]) == 4
    # report still written
    assert (tmp_path / "opt" / "report.json").exists()


def test_cli_optimize_resumes_from_field(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 6.0, "dt": 0.05}
    cfg["grad"].update({"max_iterations": 10, "patience": 30})
    cfg["output_dir"] = str(tmp_path / "resume")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    grid = grid_for(6.0, 0.05)
    seed_field = ControlField(grid, 0.7 * np.sin(np.pi * grid.times / 6.0) ** 2)
    field_csv = tmp_path / "seed.csv"
    field_to_csv(seed_field, field_csv)
    assert main(["optimize", "--config", str(path), "--field", str(field_csv)]) == 0
    report = json.loads((tmp_path / "resume" / "report.json").read_text())
    assert all(e["phase"].startswith("gradient") for e in report["trace"])


def test_cli_robustness_deterministic_rerun(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["grid"] = {"t_final": 5.0, "dt": 0.05}
    cfg["robustness"].update({"size": 16})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    grid = grid_for(5.0, 0.05)
    field_csv = tmp_path / "field.csv"
    field_to_csv(ControlField(grid, np.sin(np.pi * grid.times / 5.0) ** 2), field_csv)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["robustness", "--config", str(path), "--field", str(field_csv),
                     "--out", str(out), "--seed", "77"]) == 0
        outs.append(json.loads((out / "ensemble.json").read_text()))
    assert outs[0] == outs[1]
    assert (tmp_path / "r1" / "fidelity_hist.csv").exists()
    assert (tmp_path / "r1" / "entropy_hist.csv").exists()


def test_cli_field_override_reads_csv(tmp_path):
    cfg = preset_config("one_qubit_n1").to_dict()
    cfg["output_dir"] = str(tmp_path / "sim")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    grid = grid_for(3.0, 0.01)
    field_csv = tmp_path / "field.csv"
    field_to_csv(ControlField(grid, np.ones(grid.steps + 1)), field_csv)
    assert main(["simulate", "--config", str(path), "--field", str(field_csv)]) == 0
    data = np.loadtxt(tmp_path / "sim" / "trajectory.csv", delimiter=",", skiprows=1)
    assert data[-1, 0] == pytest.approx(3.0)  # grid comes from the CSV


def test_build_grid_rounds_steps():
    cfg = preset_config("one_qubit_n1")
    grid = build_grid(cfg)
    assert grid.steps == 2500
    assert grid.t_final == 25.0
