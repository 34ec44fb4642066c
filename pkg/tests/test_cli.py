"""Command-line interface: pipeline, exit codes, manifests, config files."""

import hashlib
import json

import pytest
from click.testing import CliRunner

from safeflow import cli, model_io


runner = CliRunner()


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, corner_dataset_file):
    out = tmp_path_factory.mktemp("model") / "model.json"
    result = runner.invoke(cli.main, ["learn", str(corner_dataset_file),
                                      "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_learn_writes_model_and_manifest(model_file):
    assert model_file.exists()
    manifest = json.loads((model_file.parent / "model.json.manifest.json").read_text())
    assert manifest["command"] == "learn"
    assert manifest["artifacts"][0]["sha256"] == sha(model_file)
    bundle = model_io.load_model(model_file)
    assert bundle.meta["components"] == 8
    assert bundle.meta["degree"] == 5
    assert bundle.meta["kernels"] == 10
    assert bundle.meta["floor"] == 0.01


def test_learn_prints_residuals(tmp_path, corner_dataset_file):
    out = tmp_path / "m.json"
    result = runner.invoke(cli.main, ["learn", str(corner_dataset_file),
                                      "--out", str(out)])
    assert result.exit_code == 0
    assert "velocity residual" in result.output
    assert "cone angle rmse" in result.output


def test_learn_zero_components_usage_error(corner_dataset_file):
    result = runner.invoke(cli.main, ["learn", str(corner_dataset_file), "-k", "0"])
    assert result.exit_code == 2


def test_learn_missing_file_exit_3():
    result = runner.invoke(cli.main, ["learn", "/does/not/exist.json"])
    assert result.exit_code == 3
    assert "/does/not/exist.json" in result.output


def test_learn_is_reproducible(tmp_path, corner_dataset_file):
    out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
    for out in (out1, out2):
        result = runner.invoke(cli.main, ["learn", str(corner_dataset_file),
                                          "--out", str(out), "--seed", "3"])
        assert result.exit_code == 0
    assert sha(out1) == sha(out2)


def test_learn_config_file_and_flag_precedence(tmp_path, corner_dataset_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"components": 5, "rows": 30}))
    out = tmp_path / "m.json"
    result = runner.invoke(cli.main, ["learn", str(corner_dataset_file),
                                      "--out", str(out), "--config", str(cfg),
                                      "--rows", "20"])
    assert result.exit_code == 0, result.output
    meta = model_io.load_model(out).meta
    assert meta["components"] == 5  # from config
    assert meta["rows"] == 20       # flag beats config


def test_simulate_writes_traces(tmp_path, model_file):
    out = tmp_path / "run"
    result = runner.invoke(cli.main, ["simulate", str(model_file),
                                      "--duration", "1.0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "nacv:" in result.output
    assert (tmp_path / "run.csv").exists()
    data = json.loads((tmp_path / "run.json").read_text())
    assert "summary" in data
    manifest = json.loads((tmp_path / "run.manifest.json").read_text())
    assert {a["path"] for a in manifest["artifacts"]} == {str(out) + ".csv",
                                                          str(out) + ".json"}


def test_simulate_reproducible(tmp_path, model_file):
    hashes = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = runner.invoke(cli.main, ["simulate", str(model_file),
                                          "--duration", "0.5", "--out", str(out)])
        assert result.exit_code == 0
        hashes.append((sha(tmp_path / f"{name}.csv"), sha(tmp_path / f"{name}.json")))
    assert hashes[0] == hashes[1]


def test_simulate_zero_duration_usage_error(model_file):
    result = runner.invoke(cli.main, ["simulate", str(model_file),
                                      "--duration", "0"])
    assert result.exit_code == 2


def test_simulate_missing_model_exit_3(tmp_path):
    result = runner.invoke(cli.main, ["simulate", str(tmp_path / "none.json")])
    assert result.exit_code == 3


def test_evaluate_requires_traces():
    result = runner.invoke(cli.main, ["evaluate"])
    assert result.exit_code == 2


def test_evaluate_single_filtered_trace(tmp_path, model_file):
    out = tmp_path / "run"
    assert runner.invoke(cli.main, ["simulate", str(model_file), "--duration",
                                    "1.0", "--out", str(out)]).exit_code == 0
    result = runner.invoke(cli.main, ["evaluate", str(tmp_path / "run.json")])
    assert result.exit_code == 0, result.output
    assert "NACV 0.000 ± 0.000" in result.output


def test_evaluate_series_output(tmp_path, model_file):
    out = tmp_path / "run"
    assert runner.invoke(cli.main, ["simulate", str(model_file), "--duration",
                                    "0.5", "--out", str(out)]).exit_code == 0
    result = runner.invoke(cli.main, ["evaluate", str(tmp_path / "run.json"),
                                      "--series-out", str(tmp_path / "ser")])
    assert result.exit_code == 0, result.output
    series = (tmp_path / "ser.run.series.csv").read_text().splitlines()
    assert series[0] == "t,th_act1,th_act2,th_act3,th1,th2,th3"
    assert len(series) > 100


def test_evaluate_schema_mismatch_exit_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"hello": 1}))
    result = runner.invoke(cli.main, ["evaluate", str(bad)])
    assert result.exit_code == 3


def test_serve_missing_model_exit_3(tmp_path):
    result = runner.invoke(cli.main, ["serve", str(tmp_path / "none.json")])
    assert result.exit_code == 3


def test_serve_busy_port_exit_4(model_file):
    import socket

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    try:
        result = runner.invoke(cli.main, ["serve", str(model_file),
                                          "--port", str(port)])
        assert result.exit_code == 4
        assert "busy" in result.output
    finally:
        sock.close()


def test_dataset_command(tmp_path):
    out = tmp_path / "d.json"
    result = runner.invoke(cli.main, ["dataset", "zigzag", "--demos", "3",
                                      "--seed", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert len(data["demos"]) == 3


def test_dataset_bad_shape_usage_error(tmp_path):
    result = runner.invoke(cli.main, ["dataset", "circle",
                                      "--out", str(tmp_path / "d.json")])
    assert result.exit_code == 2
