"""CLI: full pipeline, determinism, flag handling, error records."""

import hashlib
import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from idtomo import LedArray, OpticalConfig, select_brightfield
from idtomo.cli import RunConfig, main
from idtomo.containers import read_dataset, read_tf_slab, write_recon
from idtomo.recon import ReconstructionVolume

CONFIG = {
    "optics": {"wavelength_um": 0.63, "na": 0.25, "nx": 64, "ny": 64,
               "dx": 0.5},
    "led_array": {"pitch_mm": 4.0, "height_mm": 79.0},
    "pattern": {"kind": "full_brightfield"},
    "model": "born",
    "phantom": {"kind": "beads", "params": {
        "count": 3, "radius_um": 3.0, "contrast": [2e-3, 0.0],
        "slice_z": [0.0], "dz": 1.2, "seed": 7,
        "center_slice": 0}},
    "recon": {"slice_z": [0.0], "dz": 1.2,
              "alpha_scale": 1e-6, "beta_scale": 1e-6},
    "seed": 7,
}


def _main(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        rc = main(argv)
    return rc, out.getvalue(), err.getvalue()


def _tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def _pipeline(cfg_path: Path, out: Path):
    results = {}
    for sub in ("phantom", "simulate", "reconstruct", "report"):
        rc, stdout, stderr = _main([sub, "--config", str(cfg_path),
                                    "--out", str(out)])
        assert rc == 0, f"{sub} failed: {stderr}"
        results[sub] = json.loads(stdout)
    return results


@pytest.fixture(scope="module")
def cli_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "run.json"
    cfg_path.write_text(json.dumps(CONFIG))
    out = root / "a"
    results = _pipeline(cfg_path, out)
    return root, cfg_path, out, results


def test_cli_round_trip_quality(cli_run):
    _, _, out, results = cli_run
    assert results["phantom"]["shape"] == [1, 64, 64]
    assert results["simulate"]["n_leds"] == 89
    assert results["reconstruct"]["n_slices"] == 1
    report = json.loads((out / "report.json").read_text())
    assert report["correlation_phase"][0] > 0.999
    assert len(report["rms_phase"]) == 1
    assert report == results["report"]


def test_cli_end_to_end_determinism(cli_run):
    root, cfg_path, out_a, _ = cli_run
    out_b = root / "b"
    _pipeline(cfg_path, out_b)
    assert _tree_hash(out_a) == _tree_hash(out_b)


def test_cli_flags_accepted_in_both_positions(cli_run):
    root, cfg_path, _, _ = cli_run
    rc, _, _ = _main(["--config", str(cfg_path), "phantom",
                      "--out", str(root / "f1")])
    assert rc == 0
    rc, _, _ = _main(["phantom", "--config", str(cfg_path),
                      "--out", str(root / "f2")])
    assert rc == 0
    assert _tree_hash(root / "f1") == _tree_hash(root / "f2")


def test_cli_tf_export_on_axis(cli_run):
    root, cfg_path, _, _ = cli_run
    cfg = OpticalConfig(**CONFIG["optics"])
    illum = select_brightfield(LedArray(), cfg)
    onax = min(range(len(illum.leds)),
               key=lambda i: illum.leds[i].ux ** 2 + illum.leds[i].uy ** 2)
    out = root / "tf"
    rc, stdout, _ = _main(["tf", "--config", str(cfg_path), "--out", str(out),
                           "--led", str(onax), "--slice", "0"])
    assert rc == 0
    doc = json.loads(stdout)
    assert doc["z"] == 0.0
    # in focus the phase kernel is anti-Hermitian to rounding
    assert doc["anti_symmetry"] <= 1e-12
    tag = f"l{onax:04}_m000"
    for name in ("re", "im"):
        h, side = read_tf_slab(out / "tf" / f"tf_{name}_{tag}")
        assert h.shape == (64, 64)
        assert side["l"] == onax and side["m"] == 0
        assert (out / "tf" / f"tf_{name}_{tag}.png").exists()


def test_cli_tf_index_validation(cli_run):
    root, cfg_path, _, _ = cli_run
    rc, _, stderr = _main(["tf", "--config", str(cfg_path),
                           "--out", str(root / "tfx"), "--led", "999"])
    assert rc == 1
    record = json.loads(stderr)
    assert record["error"] == "ValueError"
    assert "--led 999 outside" in record["message"]
    rc, _, stderr = _main(["tf", "--config", str(cfg_path),
                           "--out", str(root / "tfx"), "--slice", "99"])
    assert rc == 1
    assert "--slice 99 outside" in json.loads(stderr)["message"]


def test_cli_errors_are_json_records(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1}))
    rc, _, stderr = _main(["phantom", "--config", str(bad),
                           "--out", str(tmp_path / "o")])
    assert rc == 1
    record = json.loads(stderr)
    assert record["error"] == "ValueError"
    assert "optics" in record["message"]

    bad.write_text(json.dumps({"no_such_key": 1}))
    rc, _, stderr = _main(["phantom", "--config", str(bad),
                           "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "unknown config keys" in json.loads(stderr)["message"]

    with pytest.raises(ValueError, match="unknown forward model"):
        RunConfig(model="rytov")


def test_cli_thread_count_does_not_change_bytes(tmp_path, monkeypatch):
    cfg = dict(CONFIG)
    cfg["pattern"] = {"kind": "pseudorandom", "count": 8, "seed": 3}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))

    monkeypatch.setenv("IDT_DEFAULT_THREADS", "1")
    rc, _, err = _main(["simulate", "--config", str(cfg_path),
                        "--out", str(tmp_path / "t1")])
    assert rc == 0, err
    monkeypatch.delenv("IDT_DEFAULT_THREADS")
    rc, _, err = _main(["simulate", "--config", str(cfg_path),
                        "--out", str(tmp_path / "t4"), "--threads", "4"])
    assert rc == 0, err
    assert _tree_hash(tmp_path / "t1") == _tree_hash(tmp_path / "t4")

    ds = read_dataset(tmp_path / "t1" / "dataset")
    assert len(ds) == 8
    assert ds.illum.pattern["kind"] == "pseudorandom"


def test_cli_report_on_empty_recon(tmp_path):
    cfg = OpticalConfig(**CONFIG["optics"])
    empty = ReconstructionVolume(np.zeros((2, 64, 64)), np.zeros((2, 64, 64)),
                                 np.array([0.0, 1.0]))
    write_recon(empty, tmp_path / "recon", cfg=cfg)
    run_cfg = {k: v for k, v in CONFIG.items() if k != "phantom"}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(run_cfg))
    rc, stdout, stderr = _main(["report", "--config", str(cfg_path),
                                "--out", str(tmp_path)])
    assert rc == 0, stderr
    doc = json.loads(stdout)
    assert doc["rms_phase"] == [0.0, 0.0]
    assert "correlation_phase" not in doc


def test_cli_console_script(cli_run):
    root, cfg_path, _, _ = cli_run
    r = subprocess.run([sys.executable, "-m", "idtomo.cli", "phantom",
                        "--config", str(cfg_path), "--out", str(root / "m")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["command"] == "phantom"
