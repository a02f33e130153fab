"""Command-line behavior: file emission per format, exit codes, overrides,
and the echoed configuration re-parsing to the same run.
"""
import json
import os

import pytest

from dnmsim.cli import _apply_full_scale, main
from dnmsim.config import parse_config
from dnmsim.output import read_csv

FAST = [
    "--set", "integration.t_max=60",
    "--set", "integration.steady_eps=",
    "--workers", "1",
]


def run_cli(tmp_path, *argv):
    outdir = str(tmp_path / "out")
    rc = main(list(argv) + ["--out", outdir])
    return rc, outdir


# ---------------------------------------------------------------------------
# happy paths per subcommand


def test_simulate_writes_all_formats_and_echo(tmp_path, capsys):
    rc, outdir = run_cli(tmp_path, "simulate", *FAST)
    assert rc == 0
    for name in ("config-echo.ini", "simulate.csv", "simulate.json", "simulate.svg"):
        assert os.path.exists(os.path.join(outdir, name)), name
    # stdout lists exactly the written paths
    listed = capsys.readouterr().out.strip().splitlines()
    assert os.path.join(outdir, "simulate.csv") in listed
    # the echoed configuration is parseable and reproduces the run settings
    cfg = parse_config(path=os.path.join(outdir, "config-echo.ini"))
    assert cfg.integration.t_max == 60.0
    assert cfg.integration.steady_eps is None
    assert cfg.output_directory == outdir
    # the CSV table carries the full observable set
    columns, rows = read_csv(os.path.join(outdir, "simulate.csv"))
    assert columns == ["t", "N", "P", "I", "O", "F", "G", "D_S",
                       "trace", "min_eigenvalue"]
    assert len(rows) > 100


def test_formats_flag_limits_what_is_written(tmp_path):
    rc, outdir = run_cli(tmp_path, "simulate", *FAST, "--formats", "csv")
    assert rc == 0
    assert os.path.exists(os.path.join(outdir, "simulate.csv"))
    assert not os.path.exists(os.path.join(outdir, "simulate.json"))
    assert not os.path.exists(os.path.join(outdir, "simulate.svg"))


def test_dnm_map_heatmap_svg(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "dnm-map", *FAST,
        "--set", "sweep.axis1=g:0.0:0.05:2",
        "--set", "sweep.axis2=omega_q:0.9:1.1:2",
    )
    assert rc == 0
    columns, rows = read_csv(os.path.join(outdir, "dnm-map.csv"))
    assert columns == ["g", "omega_q", "n_d"]
    assert len(rows) == 4
    svg = open(os.path.join(outdir, "dnm-map.svg")).read(200)
    assert "<?xml" in svg or "<svg" in svg


def test_scaling_reports_fit_scalars(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "scaling", *FAST, "--set", "scaling.n_values=1,2",
    )
    assert rc == 0
    doc = json.loads(open(os.path.join(outdir, "scaling.json")).read())
    assert doc["scalars"]["n_points"] == 2
    assert doc["scalars"]["n_failed"] == 0
    assert "fewer than 3" in doc["scalars"]["fit_error"]
    assert doc["provenance"]["config"]["scaling.n_values"] == "1,2"


def test_extremal_runs_a_tiny_grid(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "extremal", *FAST,
        "--set", "extremal.frequency_steps=2",
        "--set", "extremal.amplitude_steps=2",
    )
    assert rc == 0
    columns, rows = read_csv(os.path.join(outdir, "extremal.csv"))
    assert columns[:3] == ["g", "n_qubits", "n_d_min"]
    assert len(rows) == 1


def test_switch_emits_segment_column(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "switch", *FAST,
        "--set", "switch.frequencies=1.0,0.419",
        "--set", "switch.durations=30,30",
    )
    assert rc == 0
    columns, rows = read_csv(os.path.join(outdir, "switch.csv"))
    assert columns == ["t", "d_s", "segment"]
    assert {r[2] for r in rows} == {0.0, 1.0}
    doc = json.loads(open(os.path.join(outdir, "switch.json")).read())
    assert doc["scalars"]["segment0.frequency"] == 1.0


def test_fit_decay_emits_per_frequency_scalars(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "fit-decay", *FAST,
        "--set", "fit.mu_values=0.419",
        "--set", "fit.t_max=120",
        "--set", "fit.grid_a=5", "--set", "fit.grid_b=9", "--set", "fit.grid_c=5",
    )
    assert rc == 0
    columns, _ = read_csv(os.path.join(outdir, "fit-decay.csv"))
    assert columns == ["mu_q", "t", "d_s_target", "d_s_model"]
    doc = json.loads(open(os.path.join(outdir, "fit-decay.json")).read())
    assert "mu=0.419/A" in doc["scalars"]
    assert "mu=0.419/effectively_constant" in doc["scalars"]


def test_memristor_table_columns(tmp_path):
    rc, outdir = run_cli(
        tmp_path, "memristor",
        "--set", "layout.fock_dim=8",
        "--set", "memristor.transient_periods=0.0",
        "--set", "drive_c.enabled=true",
        "--workers", "1",
    )
    assert rc == 0
    columns, rows = read_csv(os.path.join(outdir, "memristor.csv"))
    assert columns == ["t", "I", "O", "F", "G"]
    assert len(rows) > 100
    doc = json.loads(open(os.path.join(outdir, "memristor.json")).read())
    assert doc["scalars"]["truncation_suspect"] is False


# ---------------------------------------------------------------------------
# exit codes and error paths


def test_config_error_exits_1(tmp_path, capsys):
    rc, _ = run_cli(tmp_path, "simulate", "--set", "model.g=banana")
    assert rc == 1
    assert "dnmsim: error:" in capsys.readouterr().err


def test_unknown_override_key_exits_1(tmp_path):
    rc, _ = run_cli(tmp_path, "simulate", "--set", "model.zeta=1")
    assert rc == 1


def test_partial_failure_exits_2_with_manifest(tmp_path, capsys):
    rc, outdir = run_cli(
        tmp_path, "dnm-map", *FAST,
        "--set", "sweep.axis1=gamma_r:-0.01:0.01:2",
        "--set", "sweep.axis2=",
    )
    assert rc == 2
    assert "failed" in capsys.readouterr().err
    doc = json.loads(open(os.path.join(outdir, "failures.json")).read())
    assert doc["n_failed"] == 1
    assert doc["failures"][0]["coordinates"] == {"gamma_r": -0.01}
    # the valid half of the grid still produced a table row
    _, rows = read_csv(os.path.join(outdir, "dnm-map.csv"))
    assert len(rows) == 1


def test_version_flag():
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_output_directory_defaults_into_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = main(["simulate", *FAST, "--formats", "csv"])
    assert rc == 0
    assert os.path.exists(os.path.join(str(tmp_path), "dnmsim-out", "simulate.csv"))


# ---------------------------------------------------------------------------
# full-scale grid expansion (tested without running the big grids)


def test_full_scale_expands_grids():
    cfg = _apply_full_scale(parse_config())
    assert cfg.get("sweep", "axis1").steps == 100
    assert cfg.get("sweep", "axis2").steps == 100
    assert cfg.get("scaling", "n_values") == tuple(range(1, 9))
    assert cfg.get("extremal", "frequency_steps") == 21
    assert cfg.get("extremal", "amplitude_steps") == 21
