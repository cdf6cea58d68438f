import subprocess
import sys

import numpy as np
import pytest

CLI = [sys.executable, "-m", "oamtopo.cli"]


def run_cli(*args, **kw):
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, timeout=600, **kw
    )


CONFIG = """
[experiment]
n_bits = 2
grid_side = 32
samples_per_class = 8
n_kernels = 16
nu = 0.02

[filtration]
mode = rips
max_dim = 1
max_points = 24

[train]
dtype = f32
epochs = 4
batch_size = 16
"""


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "desk.cfg"
    path.write_text(CONFIG)
    return str(path)


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory, cfg_file):
    """gen + ph + train once for the read-only CLI tests."""
    d = tmp_path_factory.mktemp("artifacts")
    data = str(d / "data.oamd")
    cache = str(d / "data.oamp")
    model = str(d / "cnn.oamm")
    ph_model = str(d / "ph.oamm")
    r = run_cli("gen", "--config", cfg_file, "--turbulence", "0", "--seed", "7", "--out", data)
    assert r.returncode == 0, r.stderr
    r = run_cli("ph", "--config", cfg_file, "--data", data, "--out", cache)
    assert r.returncode == 0, r.stderr
    r = run_cli("train", "--config", cfg_file, "--kind", "cnn", "--data", data, "--out", model)
    assert r.returncode == 0, r.stderr
    r = run_cli(
        "train", "--config", cfg_file, "--kind", "ph_cnn", "--data", data,
        "--cache", cache, "--out", ph_model,
    )
    assert r.returncode == 0, r.stderr
    return {"dir": d, "data": data, "cache": cache, "model": model, "ph_model": ph_model,
            "cfg": cfg_file}


def test_help_exits_zero_everywhere():
    assert run_cli("--help").returncode == 0
    for sub in ("gen", "ph", "train", "eval", "sweep", "flops", "inspect"):
        r = run_cli(sub, "--help")
        assert r.returncode == 0
        assert sub in r.stdout


def test_invalid_flag_exits_one(tmp_path):
    out = tmp_path / "never.oamd"
    r = run_cli("gen", "--bits", "2", "--frobnicate", "--out", str(out))
    assert r.returncode == 1
    assert "error_code=usage" in r.stderr
    assert not out.exists()  # no side effects


def test_unknown_subcommand_exits_one():
    r = run_cli("transmogrify")
    assert r.returncode == 1
    assert "error_code=usage" in r.stderr


def test_runtime_error_exit_two(tmp_path):
    r = run_cli("ph", "--data", str(tmp_path / "missing.oamd"), "--out", str(tmp_path / "x.oamp"))
    assert r.returncode == 2
    assert "error_code=runtime" in r.stderr


def test_gen_sample_count(tmp_path):
    out = tmp_path / "d.oamd"
    r = run_cli(
        "gen", "--bits", "4", "--turbulence", "0", "--per-class", "10",
        "--seed", "7", "--grid", "--out", str(out),
    )
    assert r.returncode == 1  # unknown --grid flag
    r = run_cli(
        "gen", "--bits", "4", "--turbulence", "0", "--per-class", "10",
        "--seed", "7", "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    assert "160 samples" in r.stdout
    from oamtopo.dataset import read_dataset

    ds = read_dataset(out)
    assert len(ds) == 160
    assert np.all(np.bincount(ds.labels) == 10)


def test_flops_table():
    r = run_cli("flops", "--arch", "alexnet")
    assert r.returncode == 0
    for token in ("conv1", "35 K", "615 K", "1.33 M", "fc", "total"):
        assert token in r.stdout


def test_eval_and_assert(artifacts, tmp_path):
    report = tmp_path / "report.json"
    r = run_cli(
        "eval", "--config", artifacts["cfg"], "--model", artifacts["model"],
        "--data", artifacts["data"], "--out", str(report),
    )
    assert r.returncode == 0, r.stderr
    assert "accuracy" in r.stdout
    import json

    rep = json.loads(report.read_text())
    assert rep["accuracy"] == pytest.approx(1.0 - rep["p_e"])

    r = run_cli(
        "eval", "--config", artifacts["cfg"], "--model", artifacts["model"],
        "--data", artifacts["data"], "--assert", "--min-accuracy", "1.01",
    )
    assert r.returncode == 3
    assert "error_code=assertion" in r.stderr


def test_eval_ph_model_uses_cache(artifacts):
    r = run_cli(
        "eval", "--config", artifacts["cfg"], "--model", artifacts["ph_model"],
        "--data", artifacts["data"], "--cache", artifacts["cache"],
    )
    assert r.returncode == 0, r.stderr


def test_inspect_outputs(artifacts, tmp_path):
    outdir = tmp_path / "dump"
    r = run_cli(
        "inspect", "--config", artifacts["cfg"], "--data", artifacts["data"],
        "--index", "9", "--cache", artifacts["cache"], "--outdir", str(outdir),
    )
    assert r.returncode == 0, r.stderr
    pgm = outdir / "sample9_intensity.pgm"
    assert pgm.exists()
    raw = pgm.read_bytes()
    assert raw.startswith(b"P5\n32 32\n255\n")
    assert len(raw) == len(b"P5\n32 32\n255\n") + 32 * 32
    csv = (outdir / "sample9_diagram.csv").read_text().splitlines()
    assert csv[0] == "dim,birth,death"


def test_inspect_bad_index(artifacts, tmp_path):
    r = run_cli(
        "inspect", "--config", artifacts["cfg"], "--data", artifacts["data"],
        "--index", "9999", "--outdir", str(tmp_path / "x"),
    )
    assert r.returncode == 1
    assert "error_code=usage" in r.stderr


def test_sweep_cli_deterministic(cfg_file, tmp_path):
    args = ["sweep", "--config", cfg_file, "--n-list", "2", "--t-list", "0",
            "--jobs", "1"]
    r1 = run_cli(*args, "--out", str(tmp_path / "g1.csv"), "--workdir", str(tmp_path / "w1"))
    assert r1.returncode == 0, r1.stderr
    r2 = run_cli(*args, "--out", str(tmp_path / "g2.csv"), "--workdir", str(tmp_path / "w2"))
    assert r2.returncode == 0, r2.stderr
    assert (tmp_path / "g1.csv").read_bytes() == (tmp_path / "g2.csv").read_bytes()
    header = (tmp_path / "g1.csv").read_text().splitlines()[0]
    assert header == "model,n_bits,turbulence,seed,accuracy,p_e"


def test_config_unknown_key_rejected(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[experiment]\nwarp_factor = 9\n")
    r = run_cli("gen", "--config", str(bad), "--out", str(tmp_path / "d.oamd"))
    assert r.returncode == 1
    assert "error_code=usage" in r.stderr
