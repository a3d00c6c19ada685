"""Smoke tests for the _qtcnn extension and the qtcnn CLI."""

import json
import math
import os
import subprocess
import sys

import pytest

import qtcnn

CLI = os.environ.get("QTCNN_CLI", "")
needs_cli = pytest.mark.skipif(not CLI, reason="QTCNN_CLI not set")


def test_run_qnn_probabilities_normalize():
    phi = [0.3, -1.2, 0.7, 2.1, -0.4, 0.9]
    probs = qtcnn.run_qnn(2, 3, phi)
    assert len(probs) == 4
    assert abs(sum(probs) - 1.0) < 1e-10
    assert probs == qtcnn.run_qnn(2, 3, phi)


def test_run_qnn_two_qubit_example():
    # Ry(pi) on qubit 0, identity on qubit 1, then the CNOT chain -> |11>
    probs = qtcnn.run_qnn(2, 1, [math.pi, 0.0])
    assert abs(probs[3] - 1.0) < 1e-12


def test_parameter_shift_matches_adjoint():
    phi = [0.4, -0.9]
    one_hot = [0.0, 1.0, 0.0, 0.0]
    adjoint = qtcnn.grad_probabilities(2, 1, phi, one_hot)
    shifted = qtcnn.grad_parameter_shift(2, 1, phi, 0, 1)
    assert abs(adjoint[0] - shifted) < 1e-10


def test_parameter_accounting():
    arch = qtcnn.CnnArchitecture()
    assert qtcnn.count_cnn_params(arch) == 3373
    assert qtcnn.required_qubits(3373) == 12
    assert qtcnn.mapping_param_count(13, 20) == 301
    report = qtcnn.params_report(arch, 12, 20)
    assert "453" in report and "456" in report


def test_build_mapping_input_bits_are_big_endian():
    x = qtcnn.build_mapping_input(0b0100100, 0.023, 7)
    assert x == [0, 1, 0, 0, 1, 0, 0, 0.023]


def test_generate_theta_zero_mapping():
    arch = qtcnn.CnnArchitecture()
    arch.window_frames = 1
    arch.feature_width = 6
    arch.conv1_channels = 1
    arch.conv1_kernel = 3
    arch.conv2_channels = 1
    arch.conv2_kernel = 2
    arch.hidden_units = 2
    m = qtcnn.count_cnn_params(arch)
    n = qtcnn.required_qubits(m)
    gamma = [0.0] * qtcnn.mapping_param_count(n + 1, 3)
    theta = qtcnn.generate_theta(
        n, 1, [0.1] * n, gamma, 3, [1.0] * 4, [0.0] * 4, arch
    )
    assert len(theta) == m
    assert all(t == 0.0 for t in theta)


def test_invalid_arguments_raise():
    with pytest.raises(qtcnn.QtcnnError):
        qtcnn.run_qnn(2, 1, [0.0])  # phi too short
    with pytest.raises(qtcnn.QtcnnError):
        qtcnn.required_qubits(0)


def test_train_synthetic_round_trip():
    config = qtcnn.TrainConfig()
    config.mode = "classical"
    config.arch.window_frames = 2
    config.arch.feature_width = 8
    config.arch.conv1_channels = 2
    config.arch.conv1_kernel = 3
    config.arch.conv2_channels = 2
    config.arch.conv2_kernel = 2
    config.arch.hidden_units = 4
    config.epochs = 2
    config.batch_size = 16
    config.synth_per_class = 40
    record = qtcnn.train(config)
    assert len(record["epochs"]) == 2
    assert 0.0 <= record["test"]["accuracy"] <= 1.0
    assert record["trainable_params"] == 41
    again = qtcnn.train(config)
    strip = lambda epochs: [
        {k: v for k, v in e.items() if k != "seconds"} for e in epochs
    ]
    assert strip(again["epochs"]) == strip(record["epochs"])
    assert again["test"] == record["test"]


@pytest.fixture()
def feature_csv(tmp_path):
    # 12 features: wide enough for the default conv kernels after pooling
    path = tmp_path / "features.csv"
    width = 12
    header = ",".join(f"f{c}" for c in range(width))
    lines = [f"{header},SEGMENT,LABEL"]
    seg = 0
    for label in ("REAL", "FAKE", "REAL", "FAKE"):
        for r in range(20):
            cells = [f"{(r * 0.1 + seg) * (c + 1) % 3:.4f}" for c in range(width)]
            lines.append(",".join(cells) + f",{seg},{label}")
        seg += 1
    path.write_text("\n".join(lines) + "\n")
    return path


def test_prepare_manifest_binding(feature_csv, tmp_path):
    manifest = tmp_path / "manifest.json"
    info = qtcnn.prepare_manifest(str(feature_csv), str(manifest), window=3, seed=9)
    assert manifest.exists()
    assert info["feature_width"] == 12
    assert info["label_names"] == ["FAKE", "REAL"]
    total = info["train_windows"] + info["validation_windows"] + info["test_windows"]
    assert total == 4 * (20 - 3 + 1)


@needs_cli
def test_cli_params():
    out = subprocess.run([CLI, "params"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "3373" in out.stdout
    assert "453" in out.stdout


@needs_cli
def test_cli_prepare_train_eval(feature_csv, tmp_path):
    out_dir = tmp_path / "out"
    prep = subprocess.run(
        [CLI, "--out-dir", str(out_dir), "prepare", "--input", str(feature_csv),
         "--window", "3", "--split-seed", "5"],
        capture_output=True, text=True,
    )
    assert prep.returncode == 0, prep.stderr
    manifest = out_dir / "manifest.json"
    assert manifest.exists()

    run_dir = tmp_path / "run"
    train = subprocess.run(
        [CLI, "--out-dir", str(run_dir), "--seed", "3", "--quiet", "train",
         "--mode", "classical", "--manifest", str(manifest), "--epochs", "1"],
        capture_output=True, text=True,
    )
    assert train.returncode == 0, train.stderr
    for artifact in ("config.json", "record.json", "metrics.csv", "checkpoint.json"):
        assert (run_dir / artifact).exists()
    record = json.loads((run_dir / "record.json").read_text())
    assert record["config"]["data.kind"] == "manifest"
    assert len(record["epochs"]) == 1

    ev = subprocess.run(
        [CLI, "eval", "--checkpoint", str(run_dir / "checkpoint.json"),
         "--manifest", str(manifest), "--split", "test"],
        capture_output=True, text=True,
    )
    assert ev.returncode == 0, ev.stderr
    assert "accuracy" in ev.stdout


@needs_cli
def test_cli_prepare_is_reproducible(feature_csv, tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        subprocess.run(
            [CLI, "--out-dir", str(d), "prepare", "--input", str(feature_csv),
             "--window", "3", "--split-seed", "5"],
            capture_output=True, text=True, check=True,
        )
        outs.append((d / "manifest.json").read_bytes())
    assert outs[0] == outs[1]


@needs_cli
def test_cli_exit_codes(tmp_path):
    three = tmp_path / "three.csv"
    three.write_text("x,LABEL\n1,a\n2,b\n3,c\n")
    out = subprocess.run(
        [CLI, "--out-dir", str(tmp_path), "prepare", "--input", str(three)],
        capture_output=True, text=True,
    )
    assert out.returncode == 2
    assert '"c"' in out.stderr  # the extra class is named

    missing = subprocess.run(
        [CLI, "train", "--manifest", str(tmp_path / "absent.json")],
        capture_output=True, text=True,
    )
    assert missing.returncode == 2

    usage = subprocess.run([CLI, "bogus-subcommand"], capture_output=True, text=True)
    assert usage.returncode == 2

    bad_blocks = subprocess.run(
        [CLI, "sweep", "--synth", "--block-list", "bogus"],
        capture_output=True, text=True,
    )
    assert bad_blocks.returncode == 2


@needs_cli
def test_cli_sweep_rows(feature_csv, tmp_path):
    out_dir = tmp_path / "prep"
    subprocess.run(
        [CLI, "--out-dir", str(out_dir), "prepare", "--input", str(feature_csv),
         "--window", "3"],
        capture_output=True, text=True, check=True,
    )
    sweep_dir = tmp_path / "sweep"
    sweep = subprocess.run(
        [CLI, "--out-dir", str(sweep_dir), "--seed", "4", "--quiet", "sweep",
         "--manifest", str(out_dir / "manifest.json"), "--epochs", "1",
         "--block-list", "1,2"],
        capture_output=True, text=True,
    )
    assert sweep.returncode == 0, sweep.stderr
    rows = (sweep_dir / "sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 2 + 1  # header, two qt rows, baseline
    assert rows[-1].startswith("0,")
