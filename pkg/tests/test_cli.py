import json
import subprocess
import sys

import pytest

from swingpinn.cli import main

TINY = ["--nu", "10", "--nf", "60", "--layers", "2,5,5,1", "--iters", "5"]


def _run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def tiny_run(tmp_path, capsys):
    out = tmp_path / "run"
    assert _run(["generate", "--trajectories", "3", "--out", str(out)], capsys)[0] == 0
    assert _run(["train", "--out", str(out), *TINY], capsys)[0] == 0
    return out


def test_generate_defaults_row_count(tmp_path, capsys):
    code, stdout, _ = _run(["generate", "--out", str(tmp_path)], capsys)
    assert code == 0
    lines = (tmp_path / "grid.csv").read_text().splitlines()
    assert lines[0] == "p1,t,delta,omega"
    assert len(lines) - 1 == 20_100
    assert "20100 samples" in stdout
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["dataset"]["n_trajectories"] == 100


def test_generate_single_trajectory(tmp_path, capsys):
    assert _run(["generate", "--trajectories", "1", "--out", str(tmp_path)], capsys)[0] == 0
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == 202


def test_generate_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        _run(["generate", "--trajectories", "4", "--out", str(tmp_path / name)], capsys)
    for f in ("grid.csv", "dataset_spec.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    manifests = [json.loads((tmp_path / name / "manifest.json").read_text()) for name in ("a", "b")]
    for m in manifests:
        m["config"].pop("out")
    assert manifests[0] == manifests[1]


def test_train_writes_artifacts(tiny_run):
    for name in (
        "checkpoint.json",
        "history.csv",
        "train_report.json",
        "eval_report.json",
        "per_trajectory.csv",
        "plot_best.csv",
        "plot_worst.csv",
        "manifest.json",
    ):
        assert (tiny_run / name).exists(), name


def test_train_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        out = str(tmp_path / name)
        _run(["generate", "--trajectories", "3", "--out", out], capsys)
        _run(["train", "--out", out, "--seed", "5", *TINY], capsys)
    for f in ("checkpoint.json", "history.csv", "eval_report.json", "per_trajectory.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_train_without_dataset_fails(tmp_path, capsys):
    code, _, err = _run(["train", "--out", str(tmp_path / "nothing"), *TINY], capsys)
    assert code == 2
    assert "not found" in err


def test_train_divergence_exit_code(tmp_path, capsys):
    out = tmp_path / "run"
    _run(["generate", "--trajectories", "2", "--out", str(out)], capsys)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"train": {"learning_rate": 100.0, "divergence_threshold": 1.0, "max_iterations": 200}}))
    code, _, err = _run(["train", "--config", str(cfg), "--out", str(out), "--nu", "10", "--nf", "60"], capsys)
    assert code == 2
    assert (out / "checkpoint_last_finite.json").exists()
    assert "diverged" in err


def test_predict_inside_and_outside(tiny_run, capsys):
    ckpt = str(tiny_run / "checkpoint.json")
    code, stdout, err = _run(["predict", "--checkpoint", ckpt, "--t", "5", "--p1", "0.1"], capsys)
    assert code == 0
    result = json.loads(stdout)
    assert result["extrapolation"] is False
    assert err == ""
    code, stdout, err = _run(["predict", "--checkpoint", ckpt, "--t", "25", "--p1", "0.1"], capsys)
    assert code == 0
    assert json.loads(stdout)["extrapolation"] is True
    assert "outside the training box" in err


def test_evaluate_checkpoint(tiny_run, capsys):
    ckpt = str(tiny_run / "checkpoint.json")
    code, stdout, _ = _run(["evaluate", "--checkpoint", ckpt, "--out", str(tiny_run)], capsys)
    assert code == 0
    assert "relative L2" in stdout


def test_malformed_checkpoint(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "swingpinn-checkpoint-1"}')
    code, _, err = _run(["predict", "--checkpoint", str(bad), "--t", "1", "--p1", "0.1"], capsys)
    assert code == 2
    assert "checkpoint" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fly"],
        ["train", "--layers", "2,x,1"],
        ["train", "--nu", "many"],
        ["identify", "--warmup", "-3"],
        ["predict", "--t", "1", "--p1", "0.1"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_warmup_flag_reaches_train_config(tmp_path, capsys):
    out = tmp_path / "run"
    _run(["generate", "--trajectories", "2", "--out", str(out)], capsys)
    assert _run(["train", "--out", str(out), "--warmup", "3", *TINY], capsys)[0] == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["train"]["physics_warmup"] == 3


def test_unknown_config_field_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert _run(["generate", "--config", str(cfg), "--out", str(tmp_path)], capsys)[0] == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "swingpinn", "generate", "--trajectories", "1", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "grid.csv").exists()
