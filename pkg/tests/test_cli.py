"""CLI thin client: argument wiring, output files, determinism."""

import json
import os
import subprocess
import sys

import pytest

from gltkit.cli import main


def run_cli(args):
    return main(args)


def test_multigrid_csv(tmp_path, capsys):
    assert run_cli(["multigrid", "--k", "2", "--d", "1", "--sizes", "8,16",
                    "--mode", "two_grid", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "multigrid.csv").read_text().splitlines()
    assert lines[0] == "n_sub,N,mode,iterations,final_residual"
    assert lines[1].startswith("8,15,two_grid,7,")
    assert lines[2].startswith("16,31,two_grid,7,")


def test_sizes_range_syntax(tmp_path):
    run_cli(["multigrid", "--k", "1", "--d", "1", "--sizes", "8..32",
             "--mode", "v_cycle", "--out", str(tmp_path)])
    lines = (tmp_path / "multigrid.csv").read_text().splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["8", "16", "32"]


def test_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        run_cli(["symbol-check", "--samples", "100", "--kmax", "3", "--out", str(out)])
    assert (out1 / "symbol-check.csv").read_bytes() == (out2 / "symbol-check.csv").read_bytes()


def test_seed_changes_symbol_check_errors(tmp_path):
    run_cli(["symbol-check", "--samples", "64", "--seed", "1", "--out", str(tmp_path / "s1")])
    run_cli(["symbol-check", "--samples", "64", "--seed", "2", "--out", str(tmp_path / "s2")])
    a = (tmp_path / "s1" / "symbol-check.csv").read_text()
    b = (tmp_path / "s2" / "symbol-check.csv").read_text()
    assert a != b


def test_json_format_and_artifacts(tmp_path):
    run_cli(["tgm-check", "--k", "2", "--grid", "64", "--format", "json",
             "--out", str(tmp_path)])
    data = json.loads((tmp_path / "tgm-check.json").read_text())
    assert data["rows"][0][1] == 3
    assert (tmp_path / "tgm_check_Q2.json").exists()


def test_assemble_writes_matrix_market(tmp_path):
    run_cli(["assemble", "--family", "P", "--k", "2", "--n-sub", "3", "--out", str(tmp_path)])
    files = os.listdir(tmp_path)
    assert any(f.endswith(".mtx") for f in files)


def test_surface_extrema_small(tmp_path):
    run_cli(["surface-extrema", "--k", "1", "--grid", "16", "--out", str(tmp_path)])
    lines = (tmp_path / "surface-extrema.csv").read_text().splitlines()
    assert len(lines) == 2
    row = lines[1].split(",")
    assert abs(float(row[1])) < 1e-12 and abs(float(row[4]) - 8.0) < 1e-12


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gltkit.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("surface-extrema", "symbol-check", "assemble", "distribution",
                "extremal-scaling", "pcg", "weak-cluster", "multigrid", "tgm-check"):
        assert sub in proc.stdout


def test_glt_threads_env(tmp_path):
    env = dict(os.environ, GLT_THREADS="1")
    env.pop("OMP_NUM_THREADS", None)
    proc = subprocess.run(
        [sys.executable, "-c",
         "import gltkit.cli, os; print(os.environ.get('OMP_NUM_THREADS'))"],
        capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "1"
