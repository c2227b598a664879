import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sswave import runio
from sswave.cli import main as cli_main


CFG_SMALL = """\
[exponents]
p = 4.0
N = 3

[solver]
nr = 256
u_cap = 1e5
store_ds = 0.04

[similarity]
ds = 0.1
n_radial = 24
"""

CFG_ZERO = CFG_SMALL + """
"""


@pytest.fixture()
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(CFG_SMALL)
    return str(p)


def run_cli(*args):
    return cli_main(list(args))


def file_hashes(run_dir, suffixes=(".csv", ".npy")):
    out = {}
    for root, _dirs, names in os.walk(run_dir):
        for n in sorted(names):
            if n.endswith(suffixes):
                p = os.path.join(root, n)
                out[os.path.relpath(p, run_dir)] = hashlib.sha256(
                    open(p, "rb").read()).hexdigest()
    return out


def test_simulate_smoke_and_manifest(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    assert run_cli("simulate", "--config", small_cfg, "--out", out) == 0
    for name in ("config.resolved.ini", "center.csv", "t_est.json",
                 "frames_u.npy", "manifest.json"):
        assert os.path.exists(os.path.join(out, name)), name
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert "center.csv" in manifest["files"]
    h = manifest["files"]["center.csv"]["sha256"]
    assert h == runio.sha256_file(os.path.join(out, "center.csv"))
    status = json.load(open(os.path.join(out, "t_est.json")))
    assert status["status"] == "blowup"
    assert abs(status["T_est"] - 1.0) < 0.01


def test_simulate_zero_data_exit_code(small_cfg, tmp_path):
    cfg = tmp_path / "zero.ini"
    cfg.write_text(CFG_SMALL.replace("[similarity]",
                                     "family = zero\nmax_steps = 300\n\n[similarity]"))
    out = str(tmp_path / "zrun")
    assert run_cli("simulate", "--config", str(cfg), "--out", out) == 3
    status = json.load(open(os.path.join(out, "t_est.json")))
    assert status["status"] == "no-blowup"


def test_simulate_bad_config_diagnostics(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[solver]\nnr = many\n")
    rc = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "r"))
    assert rc == 2
    cfg.write_text("[solvr]\nnr = 128\n")
    assert run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "r")) == 2


def test_determinism_byte_identical(small_cfg, tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (a, b):
        assert run_cli("simulate", "--config", small_cfg, "--out", out) == 0
        assert run_cli("functionals", "--out", out, "--names", "F0,E0,M") == 0
    ha, hb = file_hashes(a), file_hashes(b)
    assert ha and ha == hb


def test_functionals_outputs(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    assert run_cli("functionals", "--out", out, "--names", "F0,F1,M,singularLp1") == 0
    for name in ("F0", "F1", "M", "singularLp1"):
        assert os.path.exists(os.path.join(out, f"{name}.csv"))
        assert os.path.exists(os.path.join(out, "plots", f"{name}.csv"))
        side = json.load(open(os.path.join(out, f"{name}.json")))
        assert "frames_sha256" in side["provenance"]
    header, cols = runio.read_csv(os.path.join(out, "F0.csv"))
    assert header == ["s", "value", "tail_bound"]
    assert np.all(np.diff(cols[0]) > 0)
    # plot files are strictly two-column
    header2, _ = runio.read_csv(os.path.join(out, "plots", "F0.csv"))
    assert header2 == ["s", "value"]


def test_functionals_missing_trajectory(tmp_path):
    assert run_cli("functionals", "--out", str(tmp_path / "nope")) == 2


def test_verify_identities_static(tmp_path):
    out = str(tmp_path / "v")
    os.makedirs(out)
    rc = cli_main(["verify", "--suite", "identities", "--out", out])
    # identities suite ignores the lack of trajectory artifacts in out
    assert rc == 0
    reports = json.load(open(os.path.join(out, "verify_identities.json")))
    assert len(reports) == 6 * 10 * 2
    assert all(r["passed"] for r in reports)
    assert os.path.exists(os.path.join(out, "verify_identities.txt"))


def test_verify_monotone_and_failure_path(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    assert run_cli("verify", "--suite", "monotone", "--out", out) == 0
    reports = json.load(open(os.path.join(out, "verify_monotone.json")))
    assert any(r["name"] == "F0_monotone" for r in reports)
    # failure path: doctored exit-code contract via a monkey series
    from sswave.core import FunctionalSeries
    from sswave import verify
    bad = verify.monitor_monotone(
        FunctionalSeries("F0", [0, 1, 2], [1.0, 2.0, 3.0]))
    assert not bad["monotone"]


def test_rate_command(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    assert run_cli("rate", "--out", out, "--q", "1.0") == 0
    verdict = json.load(open(os.path.join(out, "rate_verdict.json")))
    assert verdict["slope_within_10pct"]
    assert verdict["cone_gradient_bounded"]
    assert os.path.exists(os.path.join(out, "scaled_l2.csv"))
    # q = 0 reduces to the unweighted quantity
    assert run_cli("rate", "--out", out, "--q", "0.0") == 0
    v0 = json.load(open(os.path.join(out, "rate_verdict.json")))
    assert v0["q"] == 0.0


def test_rate_rejects_non_blowup_run(small_cfg, tmp_path):
    cfg = tmp_path / "zero.ini"
    cfg.write_text(CFG_SMALL.replace("[similarity]",
                                     "family = zero\nmax_steps = 300\n\n[similarity]"))
    out = str(tmp_path / "zrun")
    run_cli("simulate", "--config", str(cfg), "--out", out)
    assert run_cli("rate", "--out", out, "--q", "1.0") == 3


def test_sweep_smoke_and_determinism(small_cfg, tmp_path):
    out = str(tmp_path / "sweep")
    rc = run_cli("sweep", "--config", small_cfg, "--p-list", "3.6,4.2",
                 "--N-list", "3", "--out", out)
    assert rc == 0
    header, cols = None, None
    with open(os.path.join(out, "aggregate.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0].startswith("p,N,status")
    assert len(lines) == 3
    h1 = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    out2 = str(tmp_path / "sweep2")
    run_cli("sweep", "--config", small_cfg, "--p-list", "3.6,4.2",
            "--N-list", "3", "--out", out2)
    with open(os.path.join(out2, "aggregate.csv")) as fh:
        lines2 = fh.read().strip().splitlines()
    assert hashlib.sha256("\n".join(lines2).encode()).hexdigest() == h1


def test_sweep_rejects_invalid_pair(small_cfg, tmp_path):
    rc = run_cli("sweep", "--config", small_cfg, "--p-list", "3.0",
                 "--N-list", "3", "--out", str(tmp_path / "s"))
    assert rc == 2


def test_console_module_entry(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    proc = subprocess.run([sys.executable, "-m", "sswave", "simulate",
                           "--config", small_cfg, "--out", out],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_parse_config_pure_defaults():
    cfg = runio.parse_config(None)
    assert cfg["exponents"]["p"] == "4.0"
    assert runio.solver_config(cfg).grid.nr == 1024


def test_dump_raw_flag(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    assert run_cli("simulate", "--config", small_cfg, "--out", out,
                   "--dump-raw") == 0
    header, cols = runio.read_csv(os.path.join(out, "raw.csv"))
    assert header == ["t", "r", "u", "ut"]
    assert cols[0].size > 0


def test_export_snapshots_flag(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    assert run_cli("functionals", "--out", out, "--names", "F0",
                   "--export-snapshots") == 0
    header, cols = runio.read_csv(os.path.join(out, "snapshots.csv"))
    assert header == ["s", "y0", "y1", "y2", "w", "ws",
                      "grad", "grad_r", "grad_theta"]
    assert np.all(cols[6] ** 2 - cols[7] ** 2 - cols[8] ** 2 < 1e-10)


def test_functionals_on_non_blowup_run(small_cfg, tmp_path):
    cfg = tmp_path / "zero.ini"
    cfg.write_text(CFG_SMALL.replace("[similarity]",
                                     "family = zero\nmax_steps = 300\n\n[similarity]"))
    out = str(tmp_path / "zrun")
    run_cli("simulate", "--config", str(cfg), "--out", out)
    assert run_cli("functionals", "--out", out) == 2


def test_verify_empty_suite_exits_ok(tmp_path, monkeypatch):
    # lemma suite without a run directory has nothing to check
    monkeypatch.chdir(tmp_path)
    assert cli_main(["verify", "--suite", "lemmas"]) == 0
    text = open(tmp_path / "verify_lemmas.txt").read()
    assert "0/0" in text


def test_verify_missing_run_inputs(tmp_path):
    out = str(tmp_path / "not_a_run")
    os.makedirs(out)
    assert cli_main(["verify", "--suite", "lemmas", "--out", out]) == 2


def test_verify_detects_corrupted_run(small_cfg, tmp_path):
    """Scaling the archived frames in time makes F0 non-monotone; the
    monotone suite must fail with exit code 1."""
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    fu_path = os.path.join(out, "frames_u.npy")
    frames = np.load(fu_path)
    wig = 1.0 + 0.1 * np.sin(np.linspace(0, 40 * np.pi, frames.shape[0]))
    np.save(fu_path, frames * wig[:, None])
    ft_path = os.path.join(out, "frames_ut.npy")
    np.save(ft_path, np.load(ft_path) * wig[:, None])
    assert run_cli("verify", "--suite", "monotone", "--out", out) == 1


def test_env_var_selects_output_root(small_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("SSWAVE_OUT", str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    assert run_cli("simulate", "--config", small_cfg) == 0
    assert os.path.exists(str(tmp_path / "root" / "run" / "center.csv"))


def test_sweep_parallel_jobs(small_cfg, tmp_path):
    out = str(tmp_path / "sweepj")
    rc = run_cli("sweep", "--config", small_cfg, "--p-list", "3.6,4.2",
                 "--N-list", "3", "--out", out, "--jobs", "2")
    assert rc == 0
    with open(os.path.join(out, "aggregate.csv")) as fh:
        assert len(fh.read().strip().splitlines()) == 3


def test_verify_suite_all(small_cfg, tmp_path):
    out = str(tmp_path / "run")
    run_cli("simulate", "--config", small_cfg, "--out", out)
    assert run_cli("verify", "--suite", "all", "--out", out) == 0
    reports = json.load(open(os.path.join(out, "verify_all.json")))
    names = {r["name"] for r in reports}
    assert "pohozaev_A" in names and "F0_monotone" in names
    assert any(n.startswith("d") for n in names)        # lemma checks
    assert any(n.startswith("window") for n in names)   # decay suite
