"""Command-line front end: parse a config, run one experiment, emit files.

Each subcommand maps to one experiment runner.  Results land in the output
directory as ``<tag>.csv`` (the table), ``<tag>.json`` (scalars and
provenance), ``<tag>.svg`` (a minimal plot), plus ``config-echo.ini`` (the
fully resolved configuration, re-parseable) and — when grid points failed —
``failures.json``.  The exit code is 0 only when every requested point
completed; 2 signals partial results with a failure manifest; 1 signals a
configuration or runtime error before any table was produced.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from typing import Optional

import numpy as np

from ._version import __version__
from .config import EXPERIMENTS, RunConfig, config_schema_text, parse_config
from .errors import DnmSimError
from .experiments import (
    ExperimentResult,
    run_decay_fit,
    run_dnm_map,
    run_extremal_dnm,
    run_memristor,
    run_scaling,
    run_simulate,
    run_switching,
)
from .fitting import PowerLawFit
from .output import (
    write_csv,
    write_failure_manifest,
    write_json_summary,
)
from . import plotting

log = logging.getLogger("dnmsim")

_FULL_SCALE_MAP_STEPS = 100
_FULL_SCALE_N_VALUES = tuple(range(1, 9))
_FULL_SCALE_DRIVE_STEPS = 21


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnmsim",
        description=(
            "Simulations of a lossy cavity exchanging energy with driven "
            "qubits: information back-flow maps, scaling, drive-controlled "
            "switching, effective decay-rate fits, and hysteresis loops."
        ),
        epilog=config_schema_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"dnmsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI configuration file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration key (repeatable)",
    )
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="parallel grid workers (default: hardware threads)",
    )
    common.add_argument(
        "--formats",
        metavar="LIST",
        help="comma subset of csv,json,svg (default csv,json,svg)",
    )
    common.add_argument(
        "--full-scale",
        action="store_true",
        help="figure-fidelity grids (slow): 100x100 maps, qubit numbers to 8",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "one integration of the configured model, full observable table",
        "dnm-map": "back-flow measure over a 1- or 2-axis parameter grid",
        "scaling": "back-flow versus qubit number with a power-law fit",
        "extremal": "min/max back-flow over a drive grid per (g, n)",
        "switch": "mid-run drive-frequency switch with per-segment classification",
        "fit-decay": "fit the sinusoidal effective decay rate to driven runs",
        "memristor": "hysteresis loop of the driven cavity",
    }
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _with_entry(cfg: RunConfig, section: str, key: str, value) -> RunConfig:
    entries = tuple(
        (s, k, value if (s, k) == (section, key) else v) for s, k, v in cfg.entries
    )
    return RunConfig(entries=entries)


def _apply_full_scale(cfg: RunConfig) -> RunConfig:
    axis1 = cfg.get("sweep", "axis1")
    cfg = _with_entry(
        cfg, "sweep", "axis1", dataclasses.replace(axis1, steps=_FULL_SCALE_MAP_STEPS)
    )
    axis2 = cfg.get("sweep", "axis2")
    if axis2 is not None:
        cfg = _with_entry(
            cfg,
            "sweep",
            "axis2",
            dataclasses.replace(axis2, steps=_FULL_SCALE_MAP_STEPS),
        )
    cfg = _with_entry(cfg, "scaling", "n_values", _FULL_SCALE_N_VALUES)
    cfg = _with_entry(cfg, "extremal", "frequency_steps", _FULL_SCALE_DRIVE_STEPS)
    cfg = _with_entry(cfg, "extremal", "amplitude_steps", _FULL_SCALE_DRIVE_STEPS)
    return cfg.validate()


def _run(command: str, cfg: RunConfig, workers: int) -> ExperimentResult:
    echo = cfg.echo_mapping()
    if command == "simulate":
        return run_simulate(
            cfg.params,
            cfg.layout,
            cfg.integration,
            initial_cavity_excitation=cfg.get("simulate", "cavity_excitation"),
            config_echo=echo,
        )
    if command == "dnm-map":
        return run_dnm_map(cfg.sweep, workers=workers, config_echo=echo)
    if command == "scaling":
        return run_scaling(
            cfg.get("scaling", "n_values"),
            cfg.params,
            cfg.integration,
            fock_dim=cfg.layout.fock_dim,
            workers=workers,
            config_echo=echo,
        )
    if command == "extremal":
        freqs = np.linspace(
            cfg.get("extremal", "frequency_min"),
            cfg.get("extremal", "frequency_max"),
            cfg.get("extremal", "frequency_steps"),
        )
        amps = np.linspace(
            cfg.get("extremal", "amplitude_min"),
            cfg.get("extremal", "amplitude_max"),
            cfg.get("extremal", "amplitude_steps"),
        )
        return run_extremal_dnm(
            cfg.get("extremal", "g_values"),
            cfg.get("extremal", "n_values"),
            cfg.params,
            cfg.integration,
            frequency_values=freqs,
            amplitude_values=amps,
            fock_dim=cfg.layout.fock_dim,
            workers=workers,
            config_echo=echo,
        )
    if command == "switch":
        return run_switching(
            cfg.params,
            cfg.integration,
            schedule=cfg.switch_schedule,
            amplitude=cfg.get("switch", "amplitude"),
            fock_dim=cfg.layout.fock_dim,
            config_echo=echo,
        )
    if command == "fit-decay":
        return run_decay_fit(
            cfg.get("fit", "mu_values"),
            cfg.params,
            cfg.integration,
            t_max_fit=cfg.get("fit", "t_max"),
            grid_shape=(
                cfg.get("fit", "grid_a"),
                cfg.get("fit", "grid_b"),
                cfg.get("fit", "grid_c"),
            ),
            workers=workers,
            config_echo=echo,
        )
    if command == "memristor":
        return run_memristor(
            cfg.params,
            cfg.get("memristor", "cycles"),
            transient_periods=cfg.get("memristor", "transient_periods"),
            n_qubits=cfg.layout.n_qubits,
            fock_dim=cfg.layout.fock_dim,
            dt=cfg.integration.dt,
            record_every=cfg.integration.record_every,
            alpha=cfg.get("memristor", "alpha"),
            config_echo=echo,
        )
    raise AssertionError(f"unhandled command {command}")


def _figure_for(result: ExperimentResult):
    """Pick the plot matching the result family (None when not plottable)."""
    if result.tag == "dnm-map":
        names = [n for n in result.columns if n != "n_d"]
        if len(names) == 2:
            x = np.asarray(result.axes[names[0]])
            y = np.asarray(result.axes[names[1]])
            z = np.full((x.size, y.size), np.nan)
            xi = {v: i for i, v in enumerate(result.axes[names[0]])}
            yi = {v: i for i, v in enumerate(result.axes[names[1]])}
            for row in result.rows:
                z[xi[row[0]], yi[row[1]]] = row[2]
            return plotting.heatmap_figure(
                x, y, z, xlabel=f"{names[0]} [omega_R]", ylabel=f"{names[1]} [omega_R]"
            )
        x = result.column(names[0])
        return plotting.series_figure(
            x, {"N_D": result.column("n_d")}, xlabel=f"{names[0]} [omega_R]", ylabel="N_D [1]"
        )
    if result.tag == "scaling":
        fit = None
        if "exponent_k" in result.scalars:
            fit = PowerLawFit(
                k=result.scalars["exponent_k"],
                log_prefactor=result.scalars["log_prefactor"],
                r_squared=result.scalars["r_squared"],
                degenerate=result.scalars.get("fit_degenerate", False),
            )
        return plotting.loglog_figure(
            result.column("n_qubits"), result.column("n_d"), fit
        )
    if result.tag == "extremal":
        g = result.column("g")
        named = {}
        for n in sorted(set(result.column("n_qubits"))):
            mask = result.column("n_qubits") == n
            named[f"min, n={int(n)}"] = result.column("n_d_min")[mask]
            named[f"max, n={int(n)}"] = result.column("n_d_max")[mask]
        return plotting.series_figure(
            sorted(set(g)),
            named,
            xlabel="g [omega_R]",
            ylabel="N_D [1]",
        )
    if result.tag == "switch":
        boundaries = []
        seg = result.column("segment")
        t = result.column("t")
        for i in range(1, len(seg)):
            if seg[i] != seg[i - 1]:
                boundaries.append(t[i])
        return plotting.series_figure(
            t,
            {"D_S": result.column("d_s")},
            ylabel="distance to vacuum [1]",
            marks=boundaries,
        )
    if result.tag == "fit-decay":
        mu = result.column("mu_q")
        t = result.column("t")
        named = {}
        for value in result.axes["mu_q"]:
            mask = mu == value
            named[f"target mu_q={value:g}"] = result.column("d_s_target")[mask]
            named[f"model mu_q={value:g}"] = result.column("d_s_model")[mask]
            t_axis = t[mask]
        return plotting.series_figure(
            t_axis, named, ylabel="distance to vacuum [1]"
        )
    if result.tag == "memristor":
        return plotting.parametric_figure(result.column("I"), result.column("O"))
    if result.tag == "simulate":
        return plotting.series_figure(
            result.column("t"),
            {"N": result.column("N"), "D_S": result.column("D_S")},
        )
    return None


def emit_results(
    result: ExperimentResult, outdir: str, formats, config_text: Optional[str] = None
) -> list:
    """Write the requested files; returns the paths written."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    if config_text is not None:
        path = os.path.join(outdir, "config-echo.ini")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(config_text)
        written.append(path)
    if "csv" in formats:
        path = os.path.join(outdir, f"{result.tag}.csv")
        write_csv(path, result.columns, result.rows)
        written.append(path)
    if "json" in formats:
        path = os.path.join(outdir, f"{result.tag}.json")
        write_json_summary(path, result)
        written.append(path)
    if "svg" in formats:
        fig = _figure_for(result)
        if fig is not None:
            path = os.path.join(outdir, f"{result.tag}.svg")
            plotting.save_svg(fig, path)
            written.append(path)
    if result.failures:
        path = os.path.join(outdir, "failures.json")
        write_failure_manifest(path, result)
        written.append(path)
    return written


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"output.directory={args.out}")
    if args.formats:
        overrides.append(f"output.formats={args.formats}")
    try:
        cfg = parse_config(args.config, overrides)
        if args.full_scale:
            cfg = _apply_full_scale(cfg)
        result = _run(args.command, cfg, max(1, args.workers))
        written = emit_results(
            result, cfg.output_directory, cfg.formats, config_text=cfg.echo_text()
        )
    except DnmSimError as exc:
        print(f"dnmsim: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    n_failed = len(result.failures)
    if n_failed:
        print(
            f"dnmsim: {n_failed} grid point(s) failed; see failures.json",
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
