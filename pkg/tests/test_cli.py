import os
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

import formsim as fs
from formsim.cli import main

REPO = Path(__file__).resolve().parents[1]


def _write_short_preset(tmp_path, name="kinematic-pentagon", **edits):
    cfg = fs.get_preset(name)
    doc = fs.scenario_to_dict(cfg)
    doc["t_final"] = 0.2
    doc.update(edits)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_preset_emits_loadable_config(capsys):
    for name in fs.preset_names():
        assert main(["preset", name]) == 0
        text = capsys.readouterr().out
        cfg = fs.load_scenario(text)
        assert cfg.name == name


def test_preset_to_file(tmp_path):
    out = tmp_path / "preset.yaml"
    assert main(["preset", "adaptive-pentagon", "-o", str(out)]) == 0
    assert fs.load_scenario(out).mode == "dynamic"


def test_run_produces_trace_and_metrics(tmp_path, capsys):
    cfg_path = _write_short_preset(tmp_path)
    trace_path = tmp_path / "trace.csv"
    metrics_path = tmp_path / "metrics.yaml"
    code = main(["run", "--config", str(cfg_path), "--trace",
                 str(trace_path), "--metrics", str(metrics_path)])
    assert code == 0
    trace = fs.Trace.read_csv(trace_path)
    assert trace.columns[0] == "t"
    assert trace.columns[-1] == "ls_residual"
    doc = yaml.safe_load(metrics_path.read_text())
    assert "convergence_times" in doc
    assert "wrote trace" in capsys.readouterr().out


@pytest.mark.parametrize("name,bound", [
    ("adaptive-pentagon", 20.0),
    ("kinematic-pentagon", 12.0),
])
def test_run_full_preset_reports_convergence(tmp_path, name, bound):
    cfg_path = tmp_path / "cfg.yaml"
    assert main(["preset", name, "-o", str(cfg_path)]) == 0
    metrics_path = tmp_path / "metrics.yaml"
    code = main(["run", "--config", str(cfg_path), "--trace",
                 str(tmp_path / "trace.csv"), "--metrics",
                 str(metrics_path)])
    assert code == 0
    doc = yaml.safe_load(metrics_path.read_text())
    assert doc["converged_all"]
    assert max(doc["convergence_times"]) < bound


def test_run_overrides_t_final(tmp_path):
    cfg_path = _write_short_preset(tmp_path)
    trace_path = tmp_path / "t.csv"
    code = main(["run", "--config", str(cfg_path), "--trace",
                 str(trace_path), "--metrics", str(tmp_path / "m.yaml"),
                 "--t-final", "0.1"])
    assert code == 0
    assert abs(fs.Trace.read_csv(trace_path).times[-1] - 0.1) < 1e-12


def test_run_bad_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("mode: kinematic\n")
    code = main(["run", "--config", str(path), "--trace",
                 str(tmp_path / "t.csv"), "--metrics",
                 str(tmp_path / "m.yaml")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_run_singular_speed_exits_nonzero(tmp_path, capsys):
    cfg = fs.get_preset("kinematic-pentagon")
    doc = fs.scenario_to_dict(cfg)
    doc["robots"][0]["trajectory"]["twist"] = [0.0, 1.0]
    path = tmp_path / "singular.yaml"
    path.write_text(yaml.safe_dump(doc))
    code = main(["run", "--config", str(path), "--trace",
                 str(tmp_path / "t.csv"), "--metrics",
                 str(tmp_path / "m.yaml")])
    assert code != 0
    assert "SingularSpeed" in capsys.readouterr().err


def test_run_divergence_exits_3(tmp_path, capsys):
    cfg_path = _write_short_preset(tmp_path, name="adaptive-pentagon",
                                   t_final=5.0, dt=0.5)
    code = main(["run", "--config", str(cfg_path), "--trace",
                 str(tmp_path / "t.csv"), "--metrics",
                 str(tmp_path / "m.yaml")])
    assert code == 3
    assert "run failed" in capsys.readouterr().err


def test_run_unwritable_trace_exits_4(tmp_path, capsys):
    cfg_path = _write_short_preset(tmp_path)
    code = main(["run", "--config", str(cfg_path), "--trace",
                 "/nonexistent-dir/trace.csv", "--metrics",
                 str(tmp_path / "m.yaml")])
    assert code == 4


def test_run_missing_config_exits_io(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "absent.yaml"),
                 "--trace", str(tmp_path / "t.csv"), "--metrics",
                 str(tmp_path / "m.yaml")])
    assert code == 4


def test_check_passes_on_presets(tmp_path, capsys):
    for name in fs.preset_names():
        cfg_path = tmp_path / f"{name}.yaml"
        cfg_path.write_text(fs.serialize_scenario(fs.get_preset(name)))
        code = main(["check", "--config", str(cfg_path),
                     "--horizon", "0.5"])
        out = capsys.readouterr().out
        assert code == 0, out
        assert "PASS least-squares-contract" in out
        assert "PASS energy-rate-identity" in out
        assert "PASS chain-pivot-certificate" in out


def test_check_skips_chain_certificate_for_star_tree(tmp_path, capsys):
    from test_engine import _star_doc
    path = tmp_path / "star.yaml"
    path.write_text(yaml.safe_dump(_star_doc()))
    code = main(["check", "--config", str(path), "--horizon", "0.3"])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "chain-pivot-certificate" not in out
    assert "PASS conditioning-guard" in out


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    env["PYTHONPATH"] = str(REPO / "src") + os.pathsep \
        + env.get("PYTHONPATH", "")
    proc = subprocess.run(
        [sys.executable, "-m", "formsim", "preset", "kinematic-pentagon"],
        capture_output=True, text=True, env=env, timeout=300)
    assert proc.returncode == 0
    assert "kinematic-pentagon" in proc.stdout
