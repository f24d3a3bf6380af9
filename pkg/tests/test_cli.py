"""Command-line surface: formats, determinism, exit codes, golden output."""

import json
import pathlib
import subprocess
import sys

import pytest

from sturmspec import __version__
from sturmspec import config as cfgmod
from sturmspec.cli import run

ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def run_cli(args):
    return run([str(a) for a in args])


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def test_config_roundtrip_is_identity():
    for name in ("simple3.cfg", "fib.cfg", "sparse3.cfg"):
        cfg = cfgmod.parse_config(str(CONFIGS / name))
        again = cfgmod.parse_config_text(cfgmod.emit_config(cfg))
        assert again == cfg


def test_config_requires_exactly_one_spec_kind():
    with pytest.raises(cfgmod.ValidationError):
        cfgmod.parse_config_text("[circle_map]\np=1\n[sparse]\nv=2\n")
    with pytest.raises(cfgmod.ValidationError):
        cfgmod.parse_config_text("[analysis]\nlevel=2\n")


def test_build_spec_from_configs():
    fib = cfgmod.build_spec(cfgmod.parse_config(str(CONFIGS / "fib.cfg")))
    assert fib.q == 610
    toep = cfgmod.build_spec(cfgmod.parse_config(str(CONFIGS / "simple3.cfg")))
    assert toep.tail_periods == (3, 3)
    sparse = cfgmod.build_spec(cfgmod.parse_config(str(CONFIGS / "sparse3.cfg")))
    assert sparse.positions_upto(30) == (3, 9, 27)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def test_generate_writes_csv_rows(tmp_path):
    out = tmp_path / "w.csv"
    code = run_cli(
        ["generate", "--spec", CONFIGS / "fib.cfg", "--start", "0",
         "--len", "50", "--out", out]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    data = [l for l in lines if not l.startswith("#")]
    assert data[0] == "index,symbol,value"
    assert len(data) == 51
    assert any(l.startswith("# spec.beta = 377/610") for l in lines)


def test_trace_table_columns_agree(tmp_path):
    out = tmp_path / "t.csv"
    code = run_cli(
        ["trace-table", "--spec", CONFIGS / "simple3.cfg", "--energy", "0.0",
         "--k", "6", "--out", out]
    )
    assert code == 0
    rows = [
        l.split(",") for l in out.read_text().splitlines()
        if l and not l.startswith("#") and not l.startswith("k,")
    ]
    assert len(rows) == 7
    for _, hd, hr, diff in rows:
        assert float(diff) <= 1e-8 * max(1.0, abs(float(hd)))


def test_spectrum_matches_golden_file(tmp_path):
    out = tmp_path / "s.json"
    code = run_cli(
        ["spectrum", "--spec", CONFIGS / "simple3.cfg", "--level", "4",
         "--grid", "20001", "--tol", "1e-10", "--format", "json", "--out", out]
    )
    assert code == 0
    golden = (ROOT / "tests/golden/spectrum_simple3_level4.json").read_bytes()
    assert out.read_bytes() == golden


def test_identical_runs_are_byte_identical(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        code = run_cli(
            ["complexity", "--spec", CONFIGS / "sparse3.cfg", "--n-max", "4",
             "--t-max", "40", "--window", "1500", "--start", "1",
             "--format", "json", "--out", out]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_lyapunov_csv(tmp_path):
    out = tmp_path / "l.csv"
    code = run_cli(
        ["lyapunov", "--spec", CONFIGS / "simple3.cfg",
         "--energies", "0.0,5.0", "--n-steps", "2000", "--out", out]
    )
    assert code == 0
    rows = [
        l.split(",") for l in out.read_text().splitlines()
        if l and not l.startswith("#") and not l.startswith("E,")
    ]
    assert len(rows) == 2
    assert float(rows[1][1]) > 0.5  # E = 5 is far outside the hull


def test_sparse_check_json(tmp_path):
    out = tmp_path / "sc.json"
    code = run_cli(
        ["sparse-check", "--spec", CONFIGS / "sparse3.cfg", "--energy", "0.0",
         "--n", "128", "--eigs", "3", "--out", out]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["version"] == __version__
    res = payload["result"]
    assert res["essential_band"] == [-2, 2]
    assert abs(res["essential_point"] - 8**0.5) < 1e-12
    assert res["certificate"]["C_E_closed"] == 1
    assert len(res["top_eigenvalues"]) == 3


def test_gordon_scan_small(tmp_path):
    out = tmp_path / "g.json"
    code = run_cli(
        ["gordon-scan", "--spec", CONFIGS / "simple3.cfg", "--level", "2",
         "--energies", "2", "--origins", "6", "--energy-level", "5",
         "--grid", "20000", "--out", out]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["result"]["falsifications"] == []
    assert payload["result"]["min_margin"] > 0


# ---------------------------------------------------------------------------
# Exit codes and errors
# ---------------------------------------------------------------------------


def test_unknown_subcommand_exits_one(capsys):
    assert run_cli(["frobnicate"]) == 1
    capsys.readouterr()


def test_unknown_flag_exits_one(capsys):
    assert run_cli(["generate", "--spec", "x", "--len", "5", "--wat"]) == 1
    capsys.readouterr()


def test_missing_config_exits_one(capsys):
    assert run_cli(["generate", "--spec", "/nonexistent.cfg", "--len", "5"]) == 1
    assert "error:" in capsys.readouterr().err


def test_out_of_range_parameter_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[sparse]\nv = 0.0\nrule = power:3\n")
    assert run_cli(["generate", "--spec", bad, "--len", "10"]) == 1
    assert "error:" in capsys.readouterr().err


def test_console_script_is_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "sturmspec.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == __version__
